from glob import glob
from os.path import basename, splitext

from setuptools import find_packages, setup

long_description = """Numerical laboratory for quasiregular curves: comass norms, pullback densities,
growth functionals, reverse Hölder checks and torus equidistribution."""

requirements_list = [
    "numpy>=1.22",
    "scipy>=1.8",
    "pydantic>=1.10,<2",
    "PyYAML>=6.0",
]

test_requirements_list = [
    "pytest>=7.0",
]


setup(
    name="qrcurve-lab",
    version="1.0.0",
    license="UNLICENSED",
    description="Quasiregular curve lab: desk-scale checks of growth and distortion inequalities",
    long_description=long_description,
    packages=find_packages("src"),
    package_dir={"": "src"},
    py_modules=[splitext(basename(path))[0] for path in glob("src/*.py")],
    python_requires=">=3.9",
    install_requires=requirements_list,
    extras_require={"test": test_requirements_list},
    entry_points={"console_scripts": ["qrcurve-lab=qrcurve_lab.cli:main"]},
    zip_safe=False,
)
