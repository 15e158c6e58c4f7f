"""Built-in model texts."""

from sleap.model import BUILTIN_MODELS, builtin_text


def builtin_model_catalog() -> str:
    """Ids of the built-in reaction network models, one per line."""
    return "\n".join(BUILTIN_MODELS)


def builtin_model_text(name: str) -> str:
    """Model file text of a built-in reaction network.

    Args:
        name: Built-in model id

    """
    try:
        return builtin_text(name)
    except KeyError as e:
        return f"# {e.args[0]}"
