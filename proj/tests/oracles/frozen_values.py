"""Independent evaluations used to freeze expected values in the C++ tests.

Run with `python3 tests/oracles/frozen_values.py`; each printed value is
copied verbatim into the matching test.
"""
import math

# angle wrap by repeated 2*pi shifts
a = -3.5 * math.pi
while a <= -math.pi:
    a += 2 * math.pi
while a > math.pi:
    a -= 2 * math.pi
print("wrap(-3.5pi) =", repr(a))

# rotation matrix evaluation
x, y, phi = 2.0, 3.0, math.pi / 4
lx, ly = 1.0, 1.0
print("to_world =", repr(x + math.cos(phi) * lx - math.sin(phi) * ly),
      repr(y + math.sin(phi) * lx + math.cos(phi) * ly))

# effective velocity
L, H, a_off, b_off = 2.75, 0.74, 3.25, 0.5
print("v_c(2, 0.3) =", repr(2.0 / (1.0 - math.tan(0.3) * H / L)))

# one Euler step of the rear-drive model, heading row uses v_c
def step(px, py, ph, ve, om, dt):
    vc = ve / (1.0 - math.tan(om) * H / L)
    k = vc / L * math.tan(om)
    nx = px + (vc * math.cos(ph) - (a_off * math.sin(ph) + b_off * math.cos(ph)) * k) * dt
    ny = py + (vc * math.sin(ph) + (a_off * math.cos(ph) - b_off * math.sin(ph)) * k) * dt
    nph = ph + vc * dt / L * math.tan(om)
    return nx, ny, nph
print("propagate(0,0,0; 1,0.2; 0.1) =", [repr(v) for v in step(0, 0, 0, 1.0, 0.2, 0.1)])

# range-bearing
print("bearing(3,4) =", repr(math.atan2(4, 3)))

# bivariate Gaussian with diagonal covariance
sd2, st2 = 0.04, 0.0004
rd, rt = 0.3, 0.01
pdf = 1.0 / (2 * math.pi * math.sqrt(sd2 * st2)) * math.exp(-0.5 * (rd * rd / sd2 + rt * rt / st2))
print("likelihood =", repr(pdf))

# RSR recurrence enumerated over a grid of u in [0, 1/N)
def rsr(w, n, u):
    counts = []
    for wi in w:
        # rounding keeps exact-integer products from landing one ulp high
        c = math.ceil(round((wi - u) * n, 12))
        counts.append(c)
        u = u + c / n - wi
    return counts
seen = set()
for i in range(1000):
    u = i / 1000 * 0.25
    seen.add(tuple(rsr([0.75, 0.25], 4, u)))
print("rsr(0.75,0.25;N=4) over u grid =", seen)

# effective sample size
w = [0.5, 0.25, 0.25]
print("ess =", repr(1.0 / sum(v * v for v in w)))

# prune
m = [0.9, 0.099, 0.001]
thr = 0.1 / len(m)
kept = [v for v in m if v >= thr]
s = sum(kept)
print("prune =", [repr(v / s) for v in kept])

# ray-circle intersection: origin (0,0), heading 0, bearing 0.1, circle (10, 1.5) r 0.5
ox, oy, b = 0.0, 0.0, 0.1
dx, dy = math.cos(b), math.sin(b)
cx, cy, r = 10.0, 1.5, 0.5
fx, fy = ox - cx, oy - cy
B = fx * dx + fy * dy
C = fx * fx + fy * fy - r * r
disc = B * B - C
print("ray-circle =", repr(-B - math.sqrt(disc)))

# IDW power 2 of two neighbours at distances 0.3 and 0.6 with probs 0.2 and 0.8
w1, w2 = 1 / 0.3 ** 2, 1 / 0.6 ** 2
print("idw =", repr((w1 * 0.2 + w2 * 0.8) / (w1 + w2)))

# grid likelihood of one beam on a cell with log-odds 2.0
occ = 1.0 - 1.0 / (1.0 + math.exp(2.0))
evidence = max(0.0, 2.0 * occ - 1.0)
print("grid beam =", repr(0.9 * evidence + 0.1))
