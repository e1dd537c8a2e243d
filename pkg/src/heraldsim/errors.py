"""Exception hierarchy shared across the package."""


class HeraldsimError(Exception):
    """Base class for all errors raised by heraldsim."""


class DeviceValidationError(HeraldsimError, ValueError):
    """A device description is physically or structurally inconsistent.

    The message names the first invariant that failed (non-unitary matrix,
    non-orthonormal signatures, bad partition, probabilities not summing
    to one, ...).
    """


class UnknownModeError(DeviceValidationError):
    """A mode label does not exist in the registry it was used with."""


class ModeMismatchError(DeviceValidationError):
    """Two states live on different mode registries."""


class DeviceParseError(HeraldsimError, ValueError):
    """A device description file is malformed (syntax or schema, not physics)."""


class PhotonCapExceededError(HeraldsimError):
    """A state exceeds the configured photon cap for multi-photon evolution."""


class ZeroSuccessError(HeraldsimError):
    """The conditional map is undefined: the requested outcome has zero probability."""


class DegenerateDeviceError(HeraldsimError):
    """Every outcome of the device has zero success probability."""
