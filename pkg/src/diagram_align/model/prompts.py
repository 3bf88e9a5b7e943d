"""Prompt builders for the four model calls.

Each builder returns a tuple of parts: ``str`` for text and
:class:`ImagePart` for an attached document or image. Text parts are sent
over the wire exactly as built here.

Two quirks are intentional and must be kept: a few adjacent literals lack a
separating comma and so concatenate into one part, and two edge-prompt parts
are plain strings whose ``{diagram_type}`` braces are sent literally.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

from ..graph import DiagramGraph


@dataclass(frozen=True)
class ImagePart:
    data: bytes
    mime_type: str = "image/png"


Part = Union[str, ImagePart]
Prompt = tuple[Part, ...]

DEFAULT_DIAGRAM_TYPE_NAME = "research paper diagram"
DEFAULT_DIAGRAM_TYPE = "Paper"


def element_list(graph: DiagramGraph) -> str:
    return "\n".join(f'- Element {n.id}: "{n.text}"' for n in graph.nodes)


def layout_caption_prompt(document: ImagePart) -> Prompt:
    pdf_blob_part = document
    prompt_parts = [
            "Describe the spatial layout of the components in this document, focusing on their relative positions and connections.",
            "For example: 'Component A is above Component B, and an arrow connects B to C which is to the right of A'.",
            "Do not interpret the meaning of the diagram, only its visual structure and element arrangement. Be concise.",
            pdf_blob_part
        ]
    return tuple(prompt_parts)


def layout_section(layout_caption: str | None) -> str:
    return f"\n**Layout Caption:**\n{layout_caption}" if layout_caption is not None else ""


def generation_prompt(paper_context: str, diagram_caption: str, layout_caption: str | None = None) -> Prompt:
    spatial_layout_prompt = layout_caption is not None
    section = layout_section(layout_caption)
    prompt = f"""
<INSTRUCTION>

Generate an SVG diagram based on the following information.

**Rules:**
1.  Create clean, well-structured SVG code. Keep the diagram width="1000" height="700".
2.  Use main concepts and expressions given in the original paper context for element text (very important).
3.  Ensure elements (shapes, text) do not overlap.
4.  Do **not** include any legends.
5.  Arrows must start and end precisely on the border of the elements they connect. Arrows should avoid crossing other elements by using vertical and horizontal corner arrows. Do not use any sloping arrows.
6.  Represent the core mechanisms described in the context. Avoid using a single large block for a complex mechanism that should be broken down. But also keep the mechanism representation intuitive and easy-to-understand enough.
7.  **Never** use any characters leading to SVG rendering issues, for example, & (Ampersand).
8.  Keep proper layout tightness. Don't leave a lot meaningless blank space between elements.
9.  Add font-size independently to every single text element.
10. Avoid generating problematic svg code, for example, svg code with invalid xml characters or duplicate attributes.
{'11.  Adhere strictly to the spatial layout in the layout and element text.' if spatial_layout_prompt else ''}

Please output *only* the SVG code block, starting with `<svg` and ending with `</svg>`.

<END OF INSTRUCTION>

**Paper Context:**
{paper_context}

**Diagram Caption/Focus:**
{diagram_caption}
{section}

Now, output the SVG code block:
"""
    return (prompt,)


def refinement_prompt(
    image: ImagePart, draft: DiagramGraph, diagram_type_name: str = DEFAULT_DIAGRAM_TYPE_NAME
) -> Prompt:
    pil_image = image
    element_list_str = element_list(draft)
    prompt_parts = [
            "You are an expert diagram analysis assistant specializing in text element coherence.",
            f"The following image is a '{diagram_type_name}'. I have already performed an initial text extraction from its source, resulting in the list of text elements below.",
            "\n**Image of the diagram:**",
            pil_image,
            "\n\n**Currently Extracted Textual Elements (- Element [ID]: \"[TEXT]\"):**",
            element_list_str,
            "\n\n**Your Task:**",
            "Analyze the image and the provided list of elements. Your goal is to improve the element list by identifying necessary merges, additions, or removals.",
            "\n1. **Merges**: Identify if any listed elements are parts of a single, continuous text block in the image and should be merged.",
            "   For example, if 'Element ID_A: Hello' and 'Element ID_B: World' visually form 'Hello World', they should be merged.",
            "\n2. **Additions**: Identify two specific types of missing nodes:",
            "   a) Duplicate nodes: Nodes that have the same text as existing nodes but represent different instances in the diagram.",
            "      For example, if there are two 'mask' nodes in the diagram but only one is in the current list.",
            "   b) Non-text nodes: Nodes that use icons or images instead of text to represent concepts.",
            "      For example, an OpenAI logo representing LLMs, or a neural network icon representing a model.",
            "      For these nodes, generate appropriate text descriptions based on their visual representation.",
            "\n3. **Removals**: Identify nodes that should be removed based on the following strict policies:",
            "   a) Non-English/Non-Math Text: Remove nodes that contain **ONLY** non-English and non-mathematical characters.",
            "      For example, if a node contains **only** Chinese characters, it should be removed.",
            "      However, if the node contains a mix of English and non-English text, keep it.",
            "   b) Numbers Only: Remove nodes that contain **ONLY** numbers (including decimal points and basic math symbols).",
            "      For example, '123', '3.14', or '1+2' should be removed.",
            "   c) Non-conceptual elements: Remove nodes not representing concepts in the diagram, such as text explanation, description, or examples."
            "\n**Important Notes:**",
            "- Do not consider general diagram elements (like arrows, lines, or decorative elements) as nodes to be added.",
            "- For duplicate nodes, ensure they are truly separate instances in the diagram.",
            "- For non-text nodes, generate clear and concise descriptions that capture their meaning.",
            "- For removals, strictly follow the three policies above. **Do not remove nodes for any other reasons.** ",
            "\n**Output Format:**",
            "First, provide your analysis in a 'Thinking Phase' section, explaining your observations and reasoning.",
            "Then, after the signal 'FINAL ANSWER:', provide your findings as a JSON object with three optional keys: 'merges', 'adds', and 'removes'.",
            "- 'merges': A list of objects, where each object has 'keep_id' (the ID of the element to retain and append to) and 'remove_id' (the ID of the element whose text will be appended and then the element removed).",
            "- 'adds': A list of objects, where each object has a 'text' key for the newly identified text string.",
            "- 'removes': A list of objects, where each object has a 'id' key for the element ID to be removed.",
            "Example JSON output: {\"merges\": [{\"keep_id\": \"G_1\", \"remove_id\": \"G_2\"}], \"adds\": [{\"text\": \"LLM Model (OpenAI)\"}, {\"text\": \"Input Image\"}], \"removes\": [{\"id\": \"G_3\"}, {\"id\": \"G_4\"}]}.",
            "If no operations are needed, provide an empty JSON object {} or omit keys.",
            "Only include IDs from the provided list for merging and removing. Ensure 'keep_id' and 'remove_id' are different.",
            "\n**Response Structure:**",
            "1. Start with 'THINKING PHASE:' and provide your detailed analysis",
            "2. After your analysis, write 'FINAL ANSWER:' on a new line",
            "3. Then provide the JSON output"
        ]
    return tuple(prompt_parts)


def edge_prompt(image: ImagePart, nodes: DiagramGraph, diagram_type: str = DEFAULT_DIAGRAM_TYPE) -> Prompt:
    pil_image = image
    element_list_str = element_list(nodes)
    prompt_parts = [
            "You are an expert diagram analysis assistant.",
            f"The following image is a diagram ({diagram_type}). I have already extracted the text elements from it.",
            "\n\n**Identified Textual Elements in the {diagram_type} Diagram (- Element [ID]: \"[TEXT]\"):**",
            element_list_str,
            "\n\n**Task:**",
            f"Analyze **all** connections (e.g., arrows, lines indicating flow) in the {diagram_type} Diagram image.",
            "Identify **all** DIRECTED one-to-one connections BETWEEN the provided element IDs.",
            "Every element should involve in at least one connection."
            "All straight or corner arrows indicate connections",
            "First, think step-by-step about the connections. Then, on a new line, provide the final list of connections.",
            "Output your findings as a JSON list of lists, where each inner list is a pair of element IDs representing a directed connection from the first ID to the second ID.",
            "For example: [[\"ID1\", \"ID2\"], [\"ID1\", \"ID3\"], [\"ID4\", \"ID2\"]].",
            "Only include **IDs** (not the text) from the list provided above. Ensure the source and target IDs are correct based on the diagram's flow.",
            "If there are no connections, return an empty list [].",
            "Start your final JSON output with the signal 'Final Answer JSON:'.",
            "\n\n**{diagram_type} Diagram Image:**",
            pil_image,
            "\n\n**Thinking Process and JSON Output of Connections:**"
        ]
    return tuple(prompt_parts)


def text_parts(prompt: Iterable[Part]) -> list[str]:
    return [p for p in prompt if isinstance(p, str)]
