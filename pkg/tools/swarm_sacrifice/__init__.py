"""
Swarm sacrifice: when should a robot stop working to localize for others?

Three layers model the same four-mode agents (DR_NOTLOST, DR_LOST, PL_DAGGER,
PL): closed-form mean-field steady states (meanfield), a well-mixed
agent-based simulator (wellmixed) and a line-of-sight simulator on a
cylindrical surface (spatial). main.py is the command-line front end.
"""

__version__ = "0.1.0"
