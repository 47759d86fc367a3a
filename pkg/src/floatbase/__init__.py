"""Contact-aided inertial-kinematic floating-base odometry on matrix Lie groups."""

__version__ = "0.1.0"
