from qrcurve_lab.services.equidistribution_service import EquidistributionService
from qrcurve_lab.services.growth_service import GrowthService
from qrcurve_lab.services.holder_service import HolderService
from qrcurve_lab.services.report_service import ReportService
from qrcurve_lab.services.signed_service import SignedService


class CommonServices:
    def __init__(self):
        self.report_service = ReportService()
        self.growth_service = GrowthService()
        self.holder_service = HolderService()
        self.equidistribution_service = EquidistributionService()
        self.signed_service = SignedService()
