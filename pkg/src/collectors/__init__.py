from .base_collector import BaseCollector
from .ray_collector import RayCollector, CollectionReport, AliasingAudit, collect_rays, audit_ray_aliasing
from .visibility_collector import VisibilityCollector, TestSetReport, build_test_set
