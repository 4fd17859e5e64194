"""Regenerates prices.csv: correlated GBM closes for six tokens, one listed late."""
import numpy as np

rng = np.random.default_rng(20240601)
symbols = ["WBTC", "ETH", "LINK", "UNI", "AAVE", "MATIC"]
vol = np.array([0.030, 0.038, 0.050, 0.055, 0.058, 0.060])
drift = np.array([0.0008, 0.0006, 0.0002, -0.0001, 0.0001, -0.0002])
corr = np.full((6, 6), 0.6) + 0.4 * np.eye(6)
cov = np.outer(vol, vol) * corr
n_days = 420
start = np.datetime64("2022-01-01")
z = rng.multivariate_normal(drift, cov, size=n_days - 1)
logp = np.vstack([np.log([30000, 2000, 15, 10, 150, 1.5]), z]).cumsum(axis=0)
late = {"MATIC": 120}

with open("prices.csv", "w") as f:
    f.write("date,symbol,close_usd\n")
    for t in range(n_days):
        d = str(start + t)
        for i, s in enumerate(symbols):
            if t < late.get(s, 0):
                continue
            f.write(f"{d},{s},{np.exp(logp[t, i]):.8g}\n")
