"""
Argument Sanitization and Validation Utilities

Validates the numeric arguments that flow into kernels, cost formulas and the CLI:
- Positive counts (channels, spatial sizes, batch)
- Odd kernel sizes
- Part values (P) and group counts (G) with their divisibility rules
- Comma separated P lists from the command line
- Seeds and output formats
"""

import logging
from typing import List, Optional, Union

logger = logging.getLogger("Validation")


class ValidationError(ValueError):
    """Raised when argument validation fails"""
    pass


class Sanitizer:
    """
    Static sanitizers shared by every package

    Usage:
        k = Sanitizer.sanitize_kernel(3)
        p = Sanitizer.sanitize_part(4, in_channels=64)
        parts = Sanitizer.sanitize_part_list("1,2,4,8")
    """

    VALID_FORMATS = {'csv', 'json'}

    # Upper bounds keep accidental typos from allocating huge tensors
    MAX_COUNT = 1 << 20
    MAX_SEED = (1 << 64) - 1

    @staticmethod
    def sanitize_count(value: Union[str, int], name: str = "count", minimum: int = 1) -> int:
        """
        Validate a non-negative integer count

        Args:
            value: Count (int or decimal string)
            name: Field name used in the error message
            minimum: Smallest accepted value

        Returns:
            int: Validated count

        Raises:
            ValidationError: If the value is not an integer or out of range
        """
        if isinstance(value, bool):
            raise ValidationError(f"{name} must be an integer, got {value!r}")
        try:
            count = int(value.strip()) if isinstance(value, str) else int(value)
        except (TypeError, ValueError) as e:
            raise ValidationError(f"Invalid {name}: {e}")

        if not isinstance(value, str) and count != value:
            raise ValidationError(f"{name} must be an integer, got {value!r}")
        if count < minimum:
            raise ValidationError(f"{name} must be >= {minimum}, got {count}")
        if count > Sanitizer.MAX_COUNT:
            raise ValidationError(f"{name} exceeds maximum ({Sanitizer.MAX_COUNT})")
        return count

    @staticmethod
    def sanitize_kernel(kernel: Union[str, int]) -> int:
        """
        Validate a kernel size: odd and >= 1 so 1x1 kernels align with the centre

        Raises:
            ValidationError: If the kernel is even or not positive
        """
        k = Sanitizer.sanitize_count(kernel, "kernel")
        if k % 2 == 0:
            raise ValidationError(f"kernel must be odd, got {k}")
        return k

    @staticmethod
    def sanitize_part(part: Union[str, int], in_channels: Optional[int] = None) -> int:
        """
        Validate a part value P

        Args:
            part: P value
            in_channels: When given, P must lie in [1, M] and divide M

        Raises:
            ValidationError: If P is out of range or does not divide M
        """
        p = Sanitizer.sanitize_count(part, "part")
        if in_channels is not None:
            if p > in_channels:
                raise ValidationError(f"part {p} exceeds in_channels {in_channels}")
            if in_channels % p != 0:
                raise ValidationError(f"{p} does not divide {in_channels}")
        return p

    @staticmethod
    def sanitize_groups(groups: Union[str, int], in_channels: int, out_channels: int) -> int:
        """
        Validate a group count G: must divide both channel counts

        Raises:
            ValidationError: On divisibility violation
        """
        g = Sanitizer.sanitize_count(groups, "groups")
        if in_channels % g != 0:
            raise ValidationError(f"{g} does not divide {in_channels}")
        if out_channels % g != 0:
            raise ValidationError(f"{g} does not divide {out_channels}")
        return g

    @staticmethod
    def sanitize_part_list(text: Union[str, List[int]]) -> List[int]:
        """
        Parse "1,2,4" (or a list) into validated part values

        Raises:
            ValidationError: If empty or any entry is invalid
        """
        if isinstance(text, str):
            items = [item for item in text.split(',') if item.strip()]
        else:
            items = list(text)
        if not items:
            raise ValidationError("part list must not be empty")
        return [Sanitizer.sanitize_count(item, "part") for item in items]

    @staticmethod
    def sanitize_seed(seed: Union[str, int]) -> int:
        """Validate a 64-bit unsigned seed"""
        if isinstance(seed, bool):
            raise ValidationError(f"seed must be an integer, got {seed!r}")
        try:
            value = int(seed.strip()) if isinstance(seed, str) else int(seed)
        except (TypeError, ValueError) as e:
            raise ValidationError(f"Invalid seed: {e}")
        if not 0 <= value <= Sanitizer.MAX_SEED:
            raise ValidationError("seed must fit in 64 unsigned bits")
        return value

    @staticmethod
    def sanitize_format(fmt: str) -> str:
        """Validate an output format name"""
        if not fmt or not isinstance(fmt, str):
            raise ValidationError("format must be a non-empty string")
        fmt = fmt.strip().lower()
        if fmt not in Sanitizer.VALID_FORMATS:
            raise ValidationError(
                f"Invalid format '{fmt}'. Must be one of: {sorted(Sanitizer.VALID_FORMATS)}"
            )
        return fmt
