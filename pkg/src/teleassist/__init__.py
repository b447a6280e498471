"""Remote-assistance driving simulator.

An arbitration graph selects between nominal lane following and a remote
assistance behavior; a (scripted or networked) operator resolves
disengagements by editing the constraints of the contouring-control planner.
"""

__version__ = "0.1.0"
