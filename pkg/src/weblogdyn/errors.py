class WeblogError(Exception):
    """Base class for data errors raised by the toolkit."""


class EmptyDataset(WeblogError):
    pass


class InsufficientData(WeblogError):
    pass


class NotFound(WeblogError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class StoreFormatError(WeblogError):
    pass
