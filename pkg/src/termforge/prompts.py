"""Prompt templates.

The template bodies are kept character-for-character, including the stray
``\\n`` and ``\\"`` sequences, because generated corpora are compared by
prompt hash across runs.
"""

from __future__ import annotations

import re
from typing import Mapping

SINGLE_TERM_TEMPLATE = (
    "Generate {n} professional, domain-specific English-({target_lang}) bilingual sentence pairs for terminology translation.\n"
    "The term pair to use is: {source_term}\\(EN) : \\\"{target_term}\\ ({target_lang})\n"
    "Requirements:\n"
    "- Each sentence pair must be natural, fluent, and contextually appropriate for IT or financial domains.\n"
    "- Include the term exactly once per sentence.\n"
    "- Wrap the term with [TERM] and [/TERM] in both the English and ({target_lang}) sentences.\n"
    "- Ensure accurate translation and alignment of the term.\n"
    "Format:\n"
    "EN: [sentence]\n"
    "{target_lang}: [sentence]\n"
    "Output exactly {n} such pairs."
)

MULTI_TERM_TEMPLATE = (
    "Generate {n} professional, domain-specific English-({target_lang}) bilingual sentence pairs for terminology translation.\n"
    "Use ALL of the following term pairs in each sentence pair:\\n{terms_str}\n"
    "Requirements:\n"
    "- Each sentence pair must be natural, fluent, and contextually appropriate for IT or financial domains.\\n\"\n"
    "- Include each term exactly once per sentence.\n"
    "- Wrap each term with [TERM] and [/TERM] in both the English and ({target_lang}) sentences.\\n\"\n"
    "- Ensure accurate translation and alignment of the terms.\n"
    "Format:\n"
    "EN: [sentence]\n"
    "{target_lang}: [sentence]\n"
    "Output exactly {n} such pairs."
)

POSTEDIT_TERMS_TEMPLATE = (
    "As an expert English-{target_lang} translator specializing in technical and business documentation, improve this {target_lang} translation.\n"
    "\n"
    "SOURCE (English): {source}\n"
    "\n"
    "CURRENT TRANSLATION ({target_lang}): {translation}\n"
    "\n"
    "REQUIRED TERMINOLOGY (English: {target_lang}): {term_str}\n"
    "\n"
    "YOUR TASK:\n"
    "1. Ensure all required terminology is correctly used\n"
    "2. Maintain the same meaning as the source text\n"
    "3. Ensure natural, fluent {target_lang} that sounds like native content\n"
    "4. Preserve formatting, numbers, and special characters\n"
    "5. Match the tone and register of the original text\n"
    "\n"
    "Return ONLY the improved {target_lang} translation with no explanations, notes, or other text."
)

POSTEDIT_NOTERMS_TEMPLATE = (
    "As an expert English-{target_lang} translator specializing in technical and business documentation, improve this {target_lang} translation.\n"
    "\n"
    "SOURCE (English): {source}\n"
    "\n"
    "CURRENT TRANSLATION ({target_lang}): {translation}\n"
    "\n"
    "Note: There may be important terminology in the source text that should be translated precisely and consistently. Please ensure any technical or business terms are rendered correctly in {target_lang}.\n"
    "\n"
    "YOUR TASK:\n"
    "1. Enhance the translation for fluency and accuracy\n"
    "2. Maintain the same meaning as the source text\n"
    "3. Ensure natural, fluent {target_lang} that sounds like native content\n"
    "4. Preserve formatting, numbers, and special characters\n"
    "5. Match the tone and register of the original text\n"
    "\n"
    "Return ONLY the improved {target_lang} translation with no explanations, notes, or other text."
)

_PLACEHOLDER = re.compile(r"\{(\w+)\}")


def render(template: str, values: Mapping[str, object]) -> str:
    """Single-pass placeholder substitution; braces inside values are left alone."""

    def sub(m: re.Match) -> str:
        key = m.group(1)
        if key not in values:
            raise KeyError(f"no value for placeholder {{{key}}}")
        return str(values[key])

    return _PLACEHOLDER.sub(sub, template)
