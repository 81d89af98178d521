"""Independent reference values for the test fixtures.

Primes come from trial division; every sum is accumulated in 50-digit
arithmetic with mpmath. Output is pasted into the Rust fixture tables.
"""
import mpmath as mp

mp.mp.dps = 50


def primes_upto(n):
    ps = []
    for k in range(2, n + 1):
        r = int(k ** 0.5)
        if all(k % p for p in ps if p <= r):
            ps.append(k)
    return ps


def sums(ps):
    s = mp.mpf(0)
    m = mp.mpf(0)
    for p in ps:
        w2 = mp.log(p) / p
        s += mp.sqrt(w2)
        m += w2
    return s, m, s * s - m


def main():
    a1 = mp.sqrt(mp.log(2) / 2)
    a2 = mp.sqrt(mp.log(3) / 3)
    print("a1", a1)
    print("a2", a2)
    print("2a1a2", 2 * a1 * a2)
    print("a2*S1", a2 * a1)
    print("w(e)", mp.sqrt(1 / mp.e))
    s, m, e = sums([2, 3, 5, 7])
    print("x=10 S", s, "M", m, "E", e)
    print("x=10 r_S", s / mp.sqrt(10 / mp.log(10)), "r_E_pi", e / 4)
    print("int_2^10 dt/sqrt(t log t)", mp.quad(lambda t: 1 / mp.sqrt(t * mp.log(t)), [2, 10]))
    ps = primes_upto(10 ** 6)
    s, m, e = sums(ps)
    print("pi(1e6)", len(ps))
    print("S(1e6)", s)
    print("M(1e6)", m)
    print("E(1e6)", e)


if __name__ == "__main__":
    main()
