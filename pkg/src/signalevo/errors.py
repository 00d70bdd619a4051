"""Exception types shared across the package."""


class SignalevoError(Exception):
    """Base class for package errors."""


class StructuralError(SignalevoError):
    """A genome or network violates a structural invariant (e.g. dangling endpoint)."""


class NumericOverflowError(SignalevoError):
    """A neuron potential became non-finite during integration."""

    def __init__(self, neuron_id, message=None):
        self.neuron_id = neuron_id
        super().__init__(message or f"non-finite potential at neuron {neuron_id}")


class ContractError(SignalevoError):
    """An operation precondition was violated by the caller."""


class DegenerateSignalError(SignalevoError):
    """The first signal of a constellation has (near-)zero norm."""


class DimensionError(SignalevoError):
    """A signal set spans more than the two dimensions a constellation plane can show."""

    def __init__(self, dimension, message=None):
        self.dimension = dimension
        super().__init__(message or f"signal set spans {dimension} dimensions, expected at most 2")


class ConfigError(SignalevoError):
    """An experiment or NEAT configuration is invalid or inconsistent."""


class ExtinctionError(SignalevoError):
    """All species died and reset-on-extinction is disabled."""


class SerializationError(SignalevoError):
    """A persisted record is malformed or has an unsupported version."""
