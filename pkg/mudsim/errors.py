'''
Exceptions raised by mudsim. Each error kind also derives from the builtin
exception a caller would naturally expect, so ``except ValueError`` keeps
working for code that does not know about this module.
'''


class MudsimError(Exception):
    '''
    Base class for every error raised by the package.
    '''


class InvalidParameter(MudsimError, ValueError):
    pass


class LengthMismatch(MudsimError, ValueError):
    pass


class DimensionMismatch(MudsimError, ValueError):
    pass


class DegenerateConstellation(MudsimError, ValueError):
    pass


class ConfigInvalid(MudsimError, ValueError):
    pass


class CapExceeded(MudsimError, RuntimeError):
    '''
    An enumeration would visit more sequences than the configured ceiling.
    '''


class FactorizationFailure(MudsimError, RuntimeError):
    '''
    The modified Gram matrix could not be factorized. Either rho violates
    the positive-definiteness bound or the input is numerically marginal.
    '''
