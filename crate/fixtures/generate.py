"""Builds the fixture corpora and mock scripts from bracket-annotated responses.

Each response marks indicators as [text]. The generator writes the plain
corpus, a mock script answering the extraction prompt for every sentence,
and (for the six-unit corpus) mapping, classification and merge answers.
Provider transcripts and golden outputs are then produced with the CLI; see
README.md.
"""

import json
import re
from pathlib import Path

HERE = Path(__file__).parent
OVERVIEW = "The study explores the causal factors that cause stigma against people with mental illness."
EXTRACT = "Return the extracted indicators in JSON format"
CLASSIFY = "a. Indicator 1 causes Indicator 2"
MAP = "Which concept best describes the indicator"
MERGE = "Should these two indicators be merged?"
MARK = re.compile(r"\[([^\]]+)\]")

CONCEPTS = [
    {"name": "signaling event", "definition": "Observable cues that signal mental illness to others.", "color": "#e15759"},
    {"name": "cognitive mediator", "definition": "Beliefs and attributions about the person and their illness.", "color": "#4e79a7"},
    {"name": "affective response", "definition": "Emotional reactions such as fear, pity or comfort.", "color": "#f28e2b"},
    {"name": "behavioral reaction", "definition": "Actions such as avoidance, rejection or helping.", "color": "#59a14f"},
]


def sentences(unit):
    # mirrors the splitter for these simple inputs: terminator followed by space
    parts = re.split(r"(?<=[.!?])\s+", unit.strip())
    return [p for p in parts if p]


def extraction_rules(units):
    rules = []
    for unit in units:
        for s in sentences(unit):
            plain = MARK.sub(r"\1", s)
            found = MARK.findall(s)
            rules.append({
                "contains": [EXTRACT, f"- Sentence: {plain}\n"],
                "respond": json.dumps({"indicators": found}),
            })
    return rules


def corpus(units):
    return "".join(MARK.sub(r"\1", u) + "\n" for u in units)


MOCK6 = [
    "Not at all. [Unforeseen events] and [not knowing how the person will react] on other days. Avery might have [mood swings] and [cannot control them].",
    "[I would hesitate] because [Avery seems unpredictable]. [I worry about the upkeep] of my property.",
    "Yes, I would. [Mental illness is treatable] and [Avery deserves a fair chance].",
    "[I don't rent to those people] because [I don't trust strangers] on my property. [Protecting my property value] matters most.",
    "Honestly, [the stories I hear on the news] make me [feel uneasy], so [I would say no].",
    "[Avery taking medication] would [make me more comfortable] about [renting the home].",
]

MOCK6_CONCEPT = {
    "Unforeseen events": 0,
    "mood swings": 0,
    "the stories I hear on the news": 0,
    "Avery taking medication": 0,
    "not knowing how the person will react": 1,
    "cannot control them": 1,
    "Avery seems unpredictable": 1,
    "Mental illness is treatable": 1,
    "Avery deserves a fair chance": 1,
    "I don't trust strangers": 1,
    "feel uneasy": 2,
    "make me more comfortable": 2,
    "I worry about the upkeep": 2,
    "I would hesitate": 3,
    "I don't rent to those people": 3,
    "Protecting my property value": 3,
    "I would say no": 3,
    "renting the home": 3,
}

# (cause, effect); every other same-sentence pair is not causal
MOCK6_EDGES = [
    ("Unforeseen events", "not knowing how the person will react"),
    ("mood swings", "cannot control them"),
    ("Avery seems unpredictable", "I would hesitate"),
    ("Mental illness is treatable", "Avery deserves a fair chance"),
    ("I don't trust strangers", "I don't rent to those people"),
    ("the stories I hear on the news", "feel uneasy"),
    ("feel uneasy", "I would say no"),
    ("Avery taking medication", "make me more comfortable"),
    ("make me more comfortable", "renting the home"),
]

MOCK6_MERGES = [("not knowing how the person will react", "cannot control them")]


def mock6_script():
    rules = extraction_rules(MOCK6)
    for text, c in MOCK6_CONCEPT.items():
        rules.append({"contains": [MAP, f"- Indicator: {text}\n"], "respond": f"label: {'abcd'[c]}"})
    for cause, effect in MOCK6_EDGES:
        # mapped indicators are rendered as "text (concept)"
        rules.append({"contains": [CLASSIFY, f"- Indicator 1: {cause} (", f"- Indicator 2: {effect} ("], "respond": "label: a"})
        rules.append({"contains": [CLASSIFY, f"- Indicator 1: {effect} (", f"- Indicator 2: {cause} ("], "respond": "label: b"})
    for x, y in MOCK6_MERGES:
        for a, b in ((x, y), (y, x)):
            rules.append({"contains": [MERGE, f"- Indicator 1: {a}\n", f"- Indicator 2: {b}\n"], "respond": "label: a"})
    rules.append({"contains": [CLASSIFY], "respond": "label: c"})
    rules.append({"contains": [MERGE], "respond": "label: b"})
    return {"rules": rules}


# Twenty responses to the tenant question; 96 marked indicators in total.
SURVEY20 = [
    "Not at all. [Unforeseen events] and [not knowing how the person will react] on other days. Avery might have [mood swings] and [cannot control them].",
    "I don't rent to those people because [I don't trust strangers] on my property. [I worry about the upkeep]. It's more about [protecting my property value]. [Repairs are expensive] and [my savings are limited].",
    "Yes, because [Avery is receiving treatment] and [treatment makes people stable]. [I would feel fine] handing over the keys. [A lease protects both of us]. [Regular inspections] would [catch problems early].",
    "[I would be nervous] because [people with schizophrenia can be violent]. [The news shows attacks] all the time. [Fear spreads quickly] in a small town. [I would not sign the lease].",
    "Maybe. [Avery seems responsible], but [missed rent payments] could happen if [an episode starts]. [A cosigner would reassure me]. [A short lease] would [limit my exposure].",
    "[I have a cousin with depression] and [she pays her bills on time], so [I would say yes]. [Knowing someone personally] [changes how I see it].",
    "No. [Neighbors might complain] about [strange behavior] and [I would lose other tenants]. [Vacancies cost money]. [I cannot afford conflict].",
    "[It depends on references]. If [previous landlords were happy], [I would trust Avery]. [Bad references] would [end the conversation].",
    "[Mental illness is an illness like any other], so [refusing Avery would be unfair]. [Discrimination is also illegal]. [I would treat Avery like any applicant].",
    "I would worry that [Avery could forget to lock the doors] or [leave the stove on], which [might cause damage]. [A fire would ruin me]. [I would check in often].",
    "[People hear voices] and [act strangely]. [I would not feel safe] near my property. [My children live next door].",
    "Sure. [Everyone deserves a home], and [stable housing helps recovery]. [Rejection makes symptoms worse]. [I would want to be part of the solution].",
    "[I have seen what a breakdown looks like] and [it scared me]. [I would keep my distance]. [That memory stays with me]. [I prefer quiet tenants].",
    "[Avery hiding the diagnosis] would [make me angry], but [telling me upfront] would [build trust]. [Honesty matters more] than [the illness itself].",
    "[Insurance might not cover damage] caused by [an episode], so [I would ask for a bigger deposit]. [Legal costs] could also [add up].",
    "Honestly, [I would feel sorry for Avery] and [want to help], but [I still need reliable rent]. [My mortgage depends on it]. [Pity is not a business plan].",
    "[Avery might stop taking medication] and then [things could get out of hand]. [I cannot take that risk]. [Nobody would warn me].",
    "[My friends would judge me] for [renting to someone like Avery]. [That pressure matters] to me. [I want to fit in] with them.",
    "Yes, [a good job shows stability], and [Avery works full time]. [Steady income] means [rent gets paid]. [I care about the numbers].",
    "[Stigma is learned from movies], and [meeting real people changes minds]. [I would give Avery a chance]. [Most tenants have problems] of some kind.",
]


EVAL_SENTENCE = "Avery might have mood swings, so I worry about late rent, but I would check references, talk to Avery and still say yes."
EVAL_PREDICTED = ["Avery might have mood swings", "I worry about late rent", "I would check references", "still say yes"]
EVAL_GOLD = EVAL_PREDICTED + ["talk to Avery"]


def eval_fixture():
    script = {"rules": [{"contains": [EXTRACT], "respond": json.dumps({"indicators": EVAL_PREDICTED})}]}
    gold = {"sentences": [{"sentence_id": 0, "gold_indicators": EVAL_GOLD, "gold_edges": [], "gold_concepts": []}]}
    return script, gold


def mock6_gold():
    out = []
    sid = 0
    for unit in MOCK6:
        for s in sentences(unit):
            marks = MARK.findall(s)
            out.append({
                "sentence_id": sid,
                "gold_indicators": marks,
                "gold_edges": [{"cause": c, "effect": e} for c, e in MOCK6_EDGES if c in marks and e in marks],
                "gold_concepts": [
                    {"indicator_text": m, "concept_name": CONCEPTS[MOCK6_CONCEPT[m]]["name"]} for m in marks
                ],
            })
            sid += 1
    return {"sentences": out}


def write(name, text):
    (HERE / name).write_text(text)


def main():
    write("mock6/overview.txt", OVERVIEW + "\n")
    write("mock6/corpus.txt", corpus(MOCK6))
    write("mock6/concepts.json", json.dumps(CONCEPTS, indent=2) + "\n")
    write("mock6/mock_script.json", json.dumps(mock6_script(), indent=2) + "\n")
    write("mock6/gold.json", json.dumps(mock6_gold(), indent=2) + "\n")

    script, gold = eval_fixture()
    write("eval/corpus.txt", EVAL_SENTENCE + "\n")
    write("eval/extract_script.json", json.dumps(script, indent=2) + "\n")
    write("eval/gold.json", json.dumps(gold, indent=2) + "\n")

    total = sum(len(MARK.findall(u)) for u in SURVEY20)
    assert len(SURVEY20) == 20, len(SURVEY20)
    assert total == 96, total
    write("survey20/overview.txt", OVERVIEW + "\n")
    write("survey20/corpus.txt", corpus(SURVEY20))
    write("survey20/extract_script.json", json.dumps({"rules": extraction_rules(SURVEY20)}, indent=2) + "\n")


if __name__ == "__main__":
    (HERE / "mock6").mkdir(exist_ok=True)
    (HERE / "survey20").mkdir(exist_ok=True)
    (HERE / "eval").mkdir(exist_ok=True)
    main()
