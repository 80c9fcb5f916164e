"""HTTP service and CLI fronting the governor."""

from .service import GatewayServer, build_gateway

__all__ = ["GatewayServer", "build_gateway"]
