# Directory: fedgw-sim/app/__init__.py

"""
fedgw-sim - Federated Residential Gateway Simulator.

Subpackages:
- schemas/: typed inputs, messages and output records
- services/: MAC model, channel, monitor, assessment and sweeps
- agents/: per-gateway offload protocol
- simulation/: discrete-event engine
- config/: settings and scenario loading
"""

__version__ = "0.3.0"
