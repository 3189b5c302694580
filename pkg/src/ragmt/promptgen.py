"""Enhanced prompt construction.

The prompt always follows the same four-block order: role assignment, the
analysis summary (A1/A2), retrieved translation examples, and the
translation instruction. Blocks are separated by single blank lines; the
examples block disappears entirely when retrieval is disabled, and the
analysis block prints explicit "unknown"/"none" values rather than changing
shape from sentence to sentence.
"""

from __future__ import annotations

from dataclasses import dataclass

from ragmt.analysis import NmccType, RiskCategory, format_risks
from ragmt.corpus import Corpus, SentencePair
from ragmt.retrieval import RetrievalHit
from ragmt.templates import load_template

PROMPT_CHAR_CEILING = 16_000


class PromptError(ValueError):
    """Broken hit linkage, malformed template, or oversized prompt."""


@dataclass(frozen=True)
class ExampleLine:
    jp: str
    zh: str

    def render(self) -> str:
        return f"(JP){self.jp} → (ZH){self.zh}"


@dataclass(frozen=True)
class EnhancedPrompt:
    role_block: str
    analysis_block: str
    examples_block: str
    instruction_block: str
    rendered: str
    template_version: str

    def to_dict(self) -> dict:
        return {
            "role_block": self.role_block,
            "analysis_block": self.analysis_block,
            "examples_block": self.examples_block,
            "instruction_block": self.instruction_block,
            "rendered": self.rendered,
            "template_version": self.template_version,
        }


def _template_blocks(template_version: str) -> tuple[str, str, str, str]:
    text = load_template("enhanced_prompt", template_version)
    blocks = [b for b in text.split("\n\n") if b.strip()]
    if len(blocks) != 4:
        raise PromptError(
            f"enhanced prompt template {template_version!r} must have 4 blocks, found {len(blocks)}"
        )
    return blocks[0].strip("\n"), blocks[1].strip("\n"), blocks[2].strip("\n"), blocks[3].strip("\n")


def render_prompt(
    sl: str,
    a1: NmccType | None,
    a2: frozenset[RiskCategory] | set[RiskCategory] | None,
    hits: list[RetrievalHit],
    kb: Corpus,
    template_version: str = "v1",
) -> EnhancedPrompt:
    """Render the enhanced prompt for one source sentence.

    `hits` must resolve in `kb` (one-to-one metadata linkage); they are
    listed in rank order, one example line each, without any editing of the
    example text. Passing a1=None omits the analysis block (the bare
    prompt-only ablation).
    """
    if not sl:
        raise PromptError("sl must be non-empty")
    role_tpl, analysis_tpl, examples_tpl, instruction_tpl = _template_blocks(template_version)

    role_block = role_tpl

    if a1 is None:
        analysis_block = ""
    else:
        analysis_block = analysis_tpl.replace("{A1}", a1.value).replace(
            "{A2}", format_risks(a2 or frozenset())
        )

    if hits:
        by_id = kb.by_id()
        lines = []
        for hit in sorted(hits, key=lambda h: h.rank):
            pair: SentencePair | None = by_id.get(hit.pair_id)
            if pair is None:
                raise PromptError(f"hit {hit.pair_id!r} does not resolve in the knowledge base")
            lines.append(ExampleLine(jp=pair.source_ja, zh=pair.target_zh).render())
        examples_block = examples_tpl.replace("{EXAMPLES}", "\n".join(lines))
    else:
        examples_block = ""

    instruction_block = instruction_tpl.replace("{SL}", sl)

    rendered = "\n\n".join(
        b for b in (role_block, analysis_block, examples_block, instruction_block) if b
    )
    if len(rendered) > PROMPT_CHAR_CEILING:
        raise PromptError(
            f"rendered prompt is {len(rendered)} chars, over the {PROMPT_CHAR_CEILING} ceiling"
        )
    return EnhancedPrompt(
        role_block=role_block,
        analysis_block=analysis_block,
        examples_block=examples_block,
        instruction_block=instruction_block,
        rendered=rendered,
        template_version=template_version,
    )
