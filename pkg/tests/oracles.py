"""Independent high-precision references built on mpmath theta functions.

sigma(z) = (2 w1 / pi) exp(eta1 z^2 / (2 w1)) theta1(v, q) / theta1'(0, q),
v = pi z / (2 w1), q = exp(i pi w2 / w1), eta1 = -pi^2 theta1'''(0) / (12 w1 theta1'(0)).
"""
import mpmath as mp

mp.mp.dps = 30


def _setup(w1, w2):
    w1, w2 = mp.mpc(w1), mp.mpc(w2)
    q = mp.exp(1j * mp.pi * w2 / w1)
    t1p = mp.jtheta(1, 0, q, 1)
    t1ppp = mp.jtheta(1, 0, q, 3)
    eta1 = -mp.pi ** 2 * t1ppp / (12 * w1 * t1p)
    return w1, w2, q, t1p, eta1


def sigma(w1, w2, z):
    w1, w2, q, t1p, eta1 = _setup(w1, w2)
    z = mp.mpc(z)
    v = mp.pi * z / (2 * w1)
    return (2 * w1 / mp.pi) * mp.exp(eta1 * z ** 2 / (2 * w1)) * mp.jtheta(1, v, q) / t1p


def zeta(w1, w2, z):
    w1, w2, q, t1p, eta1 = _setup(w1, w2)
    z = mp.mpc(z)
    v = mp.pi * z / (2 * w1)
    return eta1 * z / w1 + (mp.pi / (2 * w1)) * mp.jtheta(1, v, q, 1) / mp.jtheta(1, v, q)


def wp(w1, w2, z):
    return -mp.diff(lambda x: zeta(w1, w2, x), mp.mpc(z))


def etas(w1, w2):
    """(eta1, eta2) with eta2 = zeta(w2) from the theta quotient."""
    _, _, _, _, eta1 = _setup(w1, w2)
    return eta1, zeta(w1, w2, w2)


def invariants_eisenstein(w1, w2, n_terms=200):
    """(g2, g3) from E4, E6 q-expansions: g2 = (4/3)(pi/2w1)^4 E4, g3 = (8/27)(pi/2w1)^6 E6."""
    w1, w2 = mp.mpc(w1), mp.mpc(w2)
    q2 = mp.exp(2j * mp.pi * w2 / w1)

    def divisor_sum(n, k):
        return sum(d ** k for d in range(1, n + 1) if n % d == 0)

    e4 = 1 + 240 * mp.fsum(divisor_sum(n, 3) * q2 ** n for n in range(1, n_terms))
    e6 = 1 - 504 * mp.fsum(divisor_sum(n, 5) * q2 ** n for n in range(1, n_terms))
    c = mp.pi / (2 * w1)
    return mp.mpf(4) / 3 * c ** 4 * e4, mp.mpf(8) / 27 * c ** 6 * e6


def g3_lattice_sum(w1, w2, n=60):
    """Direct sum 140 sum' (2 m w1 + 2 n w2)^-6 over |m|, |n| <= n."""
    w1, w2 = complex(w1), complex(w2)
    total = 0j
    for a in range(-n, n + 1):
        for b in range(-n, n + 1):
            if a or b:
                total += (2 * a * w1 + 2 * b * w2) ** -6
    return 140 * total


# Values produced by the functions above (30 digits, rounded to double) and frozen here,
# so the unit tests do not depend on mpmath at run time.
FROZEN = [
    {
        "omega": ((1+0j), (0.3+1.1j)),
        "eta": ((0.8285914489577051-0.018668269776480548j), (0.2691125314414401-0.6649462138743651j)),
        "g2g3": ((7.50362006987624+1.8356379629589732j), (5.200485170701509-2.081964138977161j)),
        "points": [
            ((0.23+0.11j), (0.23002758160536743+0.10997825881486815j), (3.538489736499076-1.694482428894817j), (9.66759458611981-11.952769334863868j)),
            ((-0.41+0.37j), (-0.4115076439389772+0.37054420953144523j), (-1.3538003999400579-1.2314297471075315j), (0.3558026600573428+3.1548113699399924j)),
            ((0.9-0.2j), (0.8871588135927497-0.18010369194942066j), (0.9627259862266594+0.3071823472911529j), (1.4476684224129306+0.2614961669648067j)),
            ((1.7+0.6j), (2.1718382100735543-0.31532654739812394j), (0.9569891801882394-1.371375354951231j), (-1.3939346126719003+1.6585120749999256j)),
            ((2.6-1.9j), (3.898243020683065-27.988759401826755j), (1.7220686248992758+0.7677488288486074j), (1.2478030935433688+0.6483928989420226j)),
        ],
    },
    {
        "omega": ((0.8-0.4j), (0.5+0.9j)),
        "eta": ((0.8110095567892615+0.3999334532235353j), (0.36602517002984575-0.6181386638260691j)),
        "g2g3": ((-4.8098439377338815+14.015743620240992j), (-4.87774444303379+2.9353593856768665j)),
        "points": [
            ((0.23+0.11j), (0.23003607197353615+0.11005585868534644j), (3.5425279605794-1.6918644506139953j), (9.611305111642208-11.960710842420452j)),
            ((-0.41+0.37j), (-0.41071961512299987+0.36682809458307225j), (-1.3034515152224995-1.2277048980577507j), (0.562695729259785+3.3467134645248273j)),
            ((0.9-0.2j), (0.8699166977568535-0.23374234094508667j), (1.0076287238786827+0.012542065909621706j), (0.9887875796837493+1.339870710626837j)),
            ((1.7+0.6j), (2.4217560398384945+1.344490009684597j), (1.2082013012325092-0.05277899144916257j), (0.10041209768359168-0.6258723316940333j)),
            ((2.6-1.9j), (-7.390513026175886+100.64491873693069j), (1.8391830842761365+2.2509652655420016j), (1.0207075231918634-1.7087722727211392j)),
        ],
    },
    {
        "omega": ((1+0j), 1j),
        "eta": ((0.7853981633974483+0j), (7.732368047270961e-45-0.7853981633974483j)),
        "g2g3": ((11.817045008077116+0j), (-1.7555609942442435e-30+0j)),
        "points": [
            ((0.23+0.11j), (0.23003250931122388+0.10995809526853303j), (3.537710744187988-1.6954837417689441j), (9.680882937361062-11.946419919528003j)),
            ((-0.41+0.37j), (-0.4121796168798182+0.37127574553502324j), (-1.363744689631807-1.2396520765410868j), (0.3528427394748775+3.0853470031277443j)),
            ((0.9-0.2j), (0.8850892807095871-0.170485979049148j), (0.9364494956756209+0.33910242986754424j), (1.5359716518907476+0.21263591314647054j)),
            ((1.7+0.6j), (1.9895672211277626-0.3501242416496247j), (0.8457516457635127-1.323704096333017j), (-1.4829265280212218+1.5615321966856632j)),
            ((2.6-1.9j), (-9.375551685072395-29.24205727932808j), (3.153216313540629+1.2789795918184148j), (2.7666322573362-0.8006454210781425j)),
        ],
    },
]
