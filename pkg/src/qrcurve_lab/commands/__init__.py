from qrcurve_lab.commands import comass, density, distortion, equi, growth, higherint, prop4, rhi, signed

COMMANDS = {
    "comass": comass,
    "distortion": distortion,
    "growth": growth,
    "rhi": rhi,
    "prop4": prop4,
    "higherint": higherint,
    "equi": equi,
    "density": density,
    "signed": signed,
}
