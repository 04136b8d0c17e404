"""
Named experiment configurations for ``sdflow run --preset NAME``.

stability    r = 1.5: a mixed-mode perturbation relaxes to an offset cylinder.
instability  r = 0.8: a single axial mode grows and the neck pinches.
neumann      r = 1.5 on a bounded cylinder of length pi with Neumann ends.

The instability preset loosens the step tolerance and tightens ``dt_max``.  Near
pinch-off the solution is self-similar and an error-controlled step shrinks
like the time left to the singularity, so at the default tolerance the run
needs minutes to reach the clearance bound.  The tighter ``dt_max`` keeps the
IMEX Euler growth factor accurate (within 1%) while the step is not error limited.
"""

PRESETS = {
    "stability": """\
# perturbed cylinder above the critical radius
r = 1.5
a = 2pi
Nx = 64
Ntheta = 64
t_end = 50
ic.kind = modes
ic.amplitude = 0.01
ic.modes = cos1*cos1:1.0, sin2*cos0:0.5
output.dir = out/stability
""",
    "instability": """\
# perturbed cylinder below the critical radius
r = 0.8
a = 2pi
Nx = 64
Ntheta = 64
t_end = 50
tol_step = 1e-6
dt_max = 0.02
ic.kind = modes
ic.amplitude = 1e-4
ic.modes = cos1*cos0:1.0
output.dir = out/instability
""",
    "neumann": """\
# bounded cylinder [0, pi] with rho_x = rho_xxx = 0 at both ends
r = 1.5
a = pi
bc = neumann
Nx = 64
Ntheta = 64
t_end = 50
ic.kind = modes
ic.amplitude = 0.01
ic.modes = cos1*cos1:1.0
output.dir = out/neumann
""",
}
