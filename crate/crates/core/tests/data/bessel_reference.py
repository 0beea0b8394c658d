"""Regenerates tests/data/bessel_reference.csv (x, J0, Y0, J1, Y1) with mpmath at 40 digits."""
import mpmath as mp

mp.mp.dps = 40
xs = [mp.mpf(10) ** (mp.mpf(-6) + mp.mpf(10) * i / 59) for i in range(60)]
xs += [mp.mpf(v) for v in ("7.999", "8.0", "8.001", "24.999", "25.0", "25.001", "2.404825557695773")]
with open("bessel_reference.csv", "w") as f:
    f.write("x,j0,y0,j1,y1\n")
    for x in xs:
        x = mp.mpf(float(x))  # the exact double the test will feed in
        vals = [mp.besselj(0, x), mp.bessely(0, x), mp.besselj(1, x), mp.bessely(1, x)]
        f.write(",".join([mp.nstr(x, 20)] + [mp.nstr(v, 20) for v in vals]) + "\n")
