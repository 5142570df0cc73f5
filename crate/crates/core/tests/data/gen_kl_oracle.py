"""Regenerates kl_oracle.csv: binary KL and its upper inverse at 30 digits."""
import random

from mpmath import log, mp, mpf

mp.dps = 30


def kl(q, p):
    if p == 1 and q < 1:
        return mp.inf
    t1 = mpf(0) if q == 0 else q * log(q / p)
    t2 = mpf(0) if q == 1 else (1 - q) * log((1 - q) / (1 - p))
    return t1 + t2


def kl_inv(q, c):
    lo, hi = mpf(q), mpf(1)
    for _ in range(100):
        mid = (lo + hi) / 2
        if kl(q, mid) > c:
            hi = mid
        else:
            lo = mid
    return hi


def main():
    rng = random.Random(20210101)
    rows = []
    for i in range(10_000):
        r = rng.random()
        if i % 50 == 0:
            q = 0.0
        elif r < 0.3:
            q = rng.uniform(0.0, 0.1)
        else:
            q = rng.uniform(0.0, 0.99)
        c = 10 ** rng.uniform(-7, 0.5)
        p = rng.uniform(q, 1.0) if q < 1 else 1.0
        qm, cm, pm = mpf(q), mpf(c), mpf(p)
        rows.append((q, c, p, kl(qm, pm) if p < 1 else None, kl_inv(qm, cm)))
    with open("kl_oracle.csv", "w") as f:
        f.write("q,c,p,kl_q_p,kl_inverse_q_c\n")
        for q, c, p, k, inv in rows:
            ks = "" if k is None else mp.nstr(k, 20)
            f.write(f"{q!r},{c!r},{p!r},{ks},{mp.nstr(inv, 20)}\n")


if __name__ == "__main__":
    main()
