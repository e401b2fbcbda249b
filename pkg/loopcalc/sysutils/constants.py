from enum import Enum


class GroupTag(Enum):
    '''structure groups a connection field can take values in'''
    U1 = "u1"
    SU2 = "su2"
    GL = "gl"


class Stencil(Enum):
    CENTRAL = "central"
    FORWARD = "forward"


class SectionKind(Enum):
    TRANSPORT = "transport"
    ARC = "arc"


class DerivativeKind(Enum):
    MANDELSTAM = "mandelstam"
    CONNECTION = "connection"
    LOOP = "loop"


class Identity(Enum):
    """Rows of the verification report, in report order"""
    HOMOMORPHISM = "homomorphism"
    INVERSE = "inverse"
    THIN_INVARIANCE = "thin_invariance"
    MANDELSTAM = "mandelstam"
    DECOMPOSITION = "decomposition"
    DECOMPOSITION_TRANSPORT = "decomposition_transport"
    CURVATURE = "curvature"
    ANTISYMMETRY = "antisymmetry"
    COMMUTATOR = "commutator"
    LOOP_HOMOTOPY = "loop_homotopy"
    BIANCHI_ANALYTIC = "bianchi_analytic"
    BIANCHI_NUMERIC = "bianchi_numeric"


# identities that need three independent directions
BIANCHI_IDENTITIES = (Identity.BIANCHI_ANALYTIC, Identity.BIANCHI_NUMERIC)

REFERENCE_FIELDS = ("zero", "u1_uniform", "su2_affine")
