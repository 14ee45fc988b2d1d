"""Writes the synthetic weekly price files used by the examples and tests.

The single-asset file follows an AR(1) in net returns with
mu = 0.00207, phi = -0.13366, sigma2 = 0.00085. The five-asset file follows a
VAR(1) with the mean vector and coefficient matrix below and a hand-picked
innovation covariance (weekly volatilities `VOLS`, common correlation `RHO`).
Both start on 2017-07-03 and have 157 weekly observations (156 returns).

Run from the repository root:  python3 data/generate.py
"""

import datetime as dt
import pathlib

import numpy as np

OUT = pathlib.Path(__file__).resolve().parent
ROWS = 157
START = dt.date(2017, 7, 3)
BURN_IN = 200

AR_MU, AR_PHI, AR_SIGMA2 = 0.00207, -0.13366, 0.00085

VAR_TICKERS = ["AAPL", "MSFT", "AMZN", "FB", "GOOGL"]
VAR_MU = np.array([0.006632, -0.01047, 0.00704, 0.00245, 0.00299])
VAR_PHI = np.array(
    [
        [0.0399, 0.2395, -0.0185, 0.0322, 0.1183],
        [0.0160, -0.1943, -0.0006, -0.0020, 0.0093],
        [0.0684, -1.1354, 0.0137, 0.1444, -0.0398],
        [-0.0618, 2.7002, 0.0131, -0.1892, -0.0411],
        [-0.0882, -2.1994, 0.0667, 0.0850, -0.0589],
    ]
)
VOLS = np.array([0.035, 0.008, 0.038, 0.040, 0.033])
RHO = 0.5


def dates():
    return [(START + dt.timedelta(weeks=i)).isoformat() for i in range(ROWS)]


def simulate(mu, phi, chol, rng):
    n = mu.size
    r = mu.copy()
    out = []
    for t in range(BURN_IN + ROWS - 1):
        r = mu + phi @ (r - mu) + chol @ rng.standard_normal(n)
        if t >= BURN_IN:
            out.append(r.copy())
    return np.array(out)


def write(path, tickers, returns, start_prices):
    prices = [np.asarray(start_prices, dtype=float)]
    for r in returns:
        prices.append(prices[-1] * (1.0 + r))
    with open(path, "w") as fh:
        fh.write("date," + ",".join(tickers) + "\n")
        for d, p in zip(dates(), prices):
            fh.write(d + "," + ",".join(f"{v:.6f}" for v in p) + "\n")


def main():
    rng = np.random.default_rng(20170703)
    ar = simulate(np.array([AR_MU]), np.array([[AR_PHI]]), np.array([[np.sqrt(AR_SIGMA2)]]), rng)
    write(OUT / "sp500_weekly_synthetic.csv", ["SPX"], ar, [2429.01])

    assert max(abs(np.linalg.eigvals(VAR_PHI))) < 1.0
    corr = np.full((5, 5), RHO) + (1.0 - RHO) * np.eye(5)
    sigma = np.outer(VOLS, VOLS) * corr
    rng = np.random.default_rng(20170704)
    var = simulate(VAR_MU, VAR_PHI, np.linalg.cholesky(sigma), rng)
    write(OUT / "big5_weekly_synthetic.csv", VAR_TICKERS, var, [36.0, 69.0, 48.0, 150.0, 48.0])


if __name__ == "__main__":
    main()
