"""Regenerates softplus_oracle.csv with 50-digit arithmetic.

Columns: x, beta, thresholded softplus (identity once beta*x > 20), and the
exact softplus ln(1 + e^(beta x)) / beta.
"""
import mpmath

mpmath.mp.dps = 50
TAU = 20

with open("softplus_oracle.csv", "w") as f:
    f.write("x,beta,thresholded,exact\n")
    for beta in (1, 2):
        for k in range(201):
            x = mpmath.mpf(-50) + mpmath.mpf(k) / 2
            exact = mpmath.log1p(mpmath.exp(beta * x)) / beta
            thresholded = exact if beta * x <= TAU else x
            f.write(f"{mpmath.nstr(x, 6)},{beta},{mpmath.nstr(thresholded, 25)},{mpmath.nstr(exact, 25)}\n")
