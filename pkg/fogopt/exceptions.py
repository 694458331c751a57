__all__ = [
    "FogOptException",
    "DomainError",
    "InstabilityError",
    "InvalidParameterError",
    "UndefinedBranchError",
    "ConvergenceError",
    "TransportError",
    "ScenarioError",
]


class FogOptException(Exception):
    """ Base class for every error raised by fogopt """

    def __init__(self, msg, *args, **kwargs):
        self.msg = msg
        self.__dict__.update(kwargs)
        super(FogOptException, self).__init__(msg, *args)

    def __str__(self):
        return self.msg


class DomainError(FogOptException, ValueError):
    """ An argument lies outside the domain of the operation """


class InstabilityError(DomainError):
    """ A queue is loaded at or above its service rate """

    def __init__(self, node, load, service_rate, msg=None):
        self.node = node
        self.load = load
        self.service_rate = service_rate
        if msg is None:
            msg = "node {0} is unstable: load {1:g} >= service rate {2:g}".format(
                node, load, service_rate)
        super(InstabilityError, self).__init__(msg)


class InvalidParameterError(FogOptException, ValueError):
    """ A domain type was built with values that break its invariants """

    def __init__(self, field, value, msg=None):
        self.field = field
        self.value = value
        if msg is None:
            msg = "invalid value for {0}: {1!r}".format(field, value)
        super(InvalidParameterError, self).__init__(msg)


class UndefinedBranchError(DomainError):
    """ A closed-form branch cannot be evaluated: the third branch has a
        negative radicand, or the second branch threshold divides by zero.
    """

    def __init__(self, radicand=None, node=None, branch=3):
        self.radicand = radicand
        self.node = node
        self.branch = branch
        if branch == 2:
            msg = ("closed form undefined for node {0}: branch 2 threshold has a zero "
                   "denominator".format(node))
        else:
            msg = "closed form undefined for node {0}: radicand {1:g} < 0".format(
                node, radicand)
        super(UndefinedBranchError, self).__init__(msg)


class ConvergenceError(FogOptException):
    """ An iterative solve ran out of iterations.

        The partial trace is kept on the exception so callers can dump it.
    """

    def __init__(self, msg, trace=None, iterations=None, node=None):
        self.trace = trace
        self.iterations = iterations
        self.node = node
        super(ConvergenceError, self).__init__(msg)

    def __str__(self):
        if self.node is not None:
            return "node {0}: {1}".format(self.node, self.msg)
        if self.iterations is not None:
            return "{0} (after {1} iterations)".format(self.msg, self.iterations)
        return self.msg


class TransportError(FogOptException):
    """ A message could not be delivered; carries the partial transcript """

    def __init__(self, msg, transcript=None):
        if transcript is None:
            transcript = []
        self.transcript = transcript
        super(TransportError, self).__init__(msg)


class ScenarioError(FogOptException, ValueError):
    """ A scenario or distribution file is malformed """

    def __init__(self, msg, record=None, path=None):
        self.record = record
        self.path = path
        super(ScenarioError, self).__init__(msg)

    def __str__(self):
        where = []
        if self.path is not None:
            where.append(str(self.path))
        if self.record is not None:
            where.append("record {0}".format(self.record))
        if where:
            return "{0}: {1}".format(", ".join(where), self.msg)
        return self.msg
