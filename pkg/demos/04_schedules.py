"""Which zoom schedules can a self-simulating hierarchy use?

N_k must leave room for N_{k+1} and the level, and computing N_{k+1} must
fit a budget proportional to N_k.
"""

from selfsim.schedule import ZoomSchedule, validate_schedule

cases = [
    ("N_k = 2^(k+6)", ZoomSchedule.exponential(2, 64)),
    ("N_k = 2000 (k+1)^(3/2)", ZoomSchedule.polynomial("3/2", 2000)),
    ("N_{k+1} = 2^(N_k)", ZoomSchedule.tower(2, 64)),
    ("N_k = ceil(log2(k+2))", ZoomSchedule.logarithmic()),
]
for label, s in cases:
    v = validate_schedule(s, 20)
    verdict = "accepted" if v.accepted else f"rejected at level {v.failing_level}: {v.reason}"
    print(f"{label:26s} {verdict}")
