class EldaException(Exception):
    def __init__(self, message, source=None):
        super(EldaException, self).__init__(message)
        self.source = source


class ConfigurationError(EldaException):
    pass


class InsufficientObservationsError(EldaException):
    pass


class NonFiniteObservationError(EldaException):
    pass


class SerializationError(EldaException):
    pass


class MissingTraceError(EldaException):
    pass


class NegativeObservationError(EldaException):
    pass
