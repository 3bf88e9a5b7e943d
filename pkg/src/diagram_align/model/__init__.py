"""Vision-language model access: prompts, transports and reply protocols."""
from .backends import (
    Backend,
    HTTPBackend,
    MockBackend,
    ModelClient,
    ModelEndpointConfig,
    RecordingBackend,
    ReplyParseError,
    prompt_hash,
    record_fixture,
)
from .prompts import ImagePart
from .protocol import (
    GeneratedSVGWarning,
    Merge,
    RefinementDelta,
    apply_refinement,
    extract_edges,
    generate_diagram,
    generate_layout_caption,
    refine_nodes,
    validate_delta,
)
from .render import render_svg
