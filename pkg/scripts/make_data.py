"""Regenerates the JSON/TSV data files bundled under src/kbreason/data."""
import json
from pathlib import Path

DATA = Path(__file__).resolve().parents[1] / "src" / "kbreason" / "data"

KINSHIP_RELATIONS = [
    "father", "mother", "son", "daughter", "husband", "wife", "brother", "sister",
    "grandfather", "grandmother", "grandson", "granddaughter",
    "uncle", "aunt", "nephew", "niece",
    "father-in-law", "mother-in-law", "son-in-law", "daughter-in-law",
    "brother-in-law", "sister-in-law",
]


def kinship_schema():
    return {
        "style": "possessive-kinship",
        "templates": {r: f"{{s}}'s {r} is {{o}}" for r in KINSHIP_RELATIONS},
    }


def countries_schema():
    return {
        "style": "infix",
        "templates": {
            "locatedIn": "{s} locatedIn {o}",
            "neighborOf": "{s} neighborOf {o}",
        },
    }


# (r1, r2) -> r3 means: B is A's r1 and C is B's r2 implies C is A's r3,
# assuming distinct A, B, C in a monogamous full-sibling family tree.
KINSHIP_COMPOSITION = [
    # parent o *
    ["father", "father", "grandfather"], ["father", "mother", "grandmother"],
    ["father", "wife", "mother"], ["father", "son", "brother"],
    ["father", "daughter", "sister"], ["father", "brother", "uncle"],
    ["father", "sister", "aunt"],
    ["mother", "father", "grandfather"], ["mother", "mother", "grandmother"],
    ["mother", "husband", "father"], ["mother", "son", "brother"],
    ["mother", "daughter", "sister"], ["mother", "brother", "uncle"],
    ["mother", "sister", "aunt"],
    # child o *
    ["son", "father", "husband"], ["son", "mother", "wife"],
    ["son", "son", "grandson"], ["son", "daughter", "granddaughter"],
    ["son", "brother", "son"], ["son", "sister", "daughter"],
    ["son", "wife", "daughter-in-law"],
    ["daughter", "father", "husband"], ["daughter", "mother", "wife"],
    ["daughter", "son", "grandson"], ["daughter", "daughter", "granddaughter"],
    ["daughter", "brother", "son"], ["daughter", "sister", "daughter"],
    ["daughter", "husband", "son-in-law"],
    # spouse o *
    ["husband", "father", "father-in-law"], ["husband", "mother", "mother-in-law"],
    ["husband", "son", "son"], ["husband", "daughter", "daughter"],
    ["husband", "brother", "brother-in-law"], ["husband", "sister", "sister-in-law"],
    ["wife", "father", "father-in-law"], ["wife", "mother", "mother-in-law"],
    ["wife", "son", "son"], ["wife", "daughter", "daughter"],
    ["wife", "brother", "brother-in-law"], ["wife", "sister", "sister-in-law"],
    # sibling o *
    ["brother", "father", "father"], ["brother", "mother", "mother"],
    ["brother", "son", "nephew"], ["brother", "daughter", "niece"],
    ["brother", "brother", "brother"], ["brother", "sister", "sister"],
    ["brother", "wife", "sister-in-law"],
    ["sister", "father", "father"], ["sister", "mother", "mother"],
    ["sister", "son", "nephew"], ["sister", "daughter", "niece"],
    ["sister", "brother", "brother"], ["sister", "sister", "sister"],
    ["sister", "husband", "brother-in-law"],
    # derived o * (only unambiguous continuations)
    ["grandfather", "wife", "grandmother"], ["grandmother", "husband", "grandfather"],
    ["grandson", "brother", "grandson"], ["grandson", "sister", "granddaughter"],
    ["granddaughter", "brother", "grandson"], ["granddaughter", "sister", "granddaughter"],
    ["uncle", "wife", "aunt"], ["aunt", "husband", "uncle"],
    ["nephew", "brother", "nephew"], ["nephew", "sister", "niece"],
    ["niece", "brother", "nephew"], ["niece", "sister", "niece"],
    ["father-in-law", "wife", "mother-in-law"], ["mother-in-law", "husband", "father-in-law"],
    ["son-in-law", "son", "grandson"], ["son-in-law", "daughter", "granddaughter"],
    ["son-in-law", "wife", "daughter"],
    ["daughter-in-law", "son", "grandson"], ["daughter-in-law", "daughter", "granddaughter"],
    ["daughter-in-law", "husband", "son"],
    ["brother-in-law", "son", "nephew"], ["brother-in-law", "daughter", "niece"],
    ["sister-in-law", "son", "nephew"], ["sister-in-law", "daughter", "niece"],
]

COUNTRIES_COMPOSITION = [
    ["locatedIn", "locatedIn", "locatedIn"],
    ["neighborOf", "locatedIn", "locatedIn"],
    ["neighborOf", "neighborOf", "neighborOf"],
]

REGIONS = {
    "africa": {
        "northern_africa": ["egypt", "libya", "algeria", "sudan"],
        "middle_africa": [
            "chad", "cameroon", "dr_congo", "republic_of_the_congo",
            "central_african_republic", "angola",
        ],
        "eastern_africa": ["kenya", "uganda", "south_sudan", "ethiopia"],
    },
    "americas": {
        "south_america": [
            "brazil", "argentina", "uruguay", "paraguay", "chile", "peru", "bolivia",
        ],
    },
    "oceania": {
        "micronesia": ["palau", "kiribati", "marshall_islands"],
        "melanesia": ["fiji", "papua_new_guinea", "vanuatu", "solomon_islands"],
        "polynesia": ["samoa", "tonga"],
    },
}

NEIGHBORS = [
    ("egypt", "libya"), ("egypt", "sudan"), ("libya", "algeria"), ("libya", "chad"),
    ("libya", "sudan"), ("sudan", "chad"), ("sudan", "south_sudan"),
    ("sudan", "ethiopia"), ("sudan", "central_african_republic"),
    ("chad", "central_african_republic"), ("chad", "cameroon"),
    ("cameroon", "central_african_republic"), ("cameroon", "republic_of_the_congo"),
    ("central_african_republic", "south_sudan"), ("central_african_republic", "dr_congo"),
    ("central_african_republic", "republic_of_the_congo"),
    ("dr_congo", "republic_of_the_congo"), ("dr_congo", "angola"),
    ("dr_congo", "south_sudan"), ("dr_congo", "uganda"),
    ("republic_of_the_congo", "angola"), ("kenya", "uganda"), ("kenya", "ethiopia"),
    ("kenya", "south_sudan"), ("uganda", "south_sudan"), ("ethiopia", "south_sudan"),
    ("brazil", "argentina"), ("brazil", "uruguay"), ("brazil", "paraguay"),
    ("brazil", "peru"), ("brazil", "bolivia"), ("argentina", "uruguay"),
    ("argentina", "paraguay"), ("argentina", "chile"), ("argentina", "bolivia"),
    ("chile", "peru"), ("chile", "bolivia"), ("peru", "bolivia"),
    ("paraguay", "bolivia"), ("papua_new_guinea", "solomon_islands"),
    ("fiji", "vanuatu"), ("vanuatu", "solomon_islands"),
]


def countries_tsv():
    lines = []
    for region, subregions in REGIONS.items():
        for subregion, countries in subregions.items():
            lines.append(f"{subregion}\tlocatedIn\t{region}")
            for c in countries:
                lines.append(f"{c}\tlocatedIn\t{subregion}")
                lines.append(f"{c}\tlocatedIn\t{region}")
    for a, b in NEIGHBORS:
        lines.append(f"{a}\tneighborOf\t{b}")
        lines.append(f"{b}\tneighborOf\t{a}")
    return "\n".join(lines) + "\n"


STORY_TEMPLATES = {
    "father": [
        "The father of {s} is {o}.",
        "{s} went to a ball game with father {o}.",
    ],
    "mother": [
        "The mother of {s} is {o}.",
        "{s} baked cookies together with mother {o}.",
    ],
    "son": [
        "{s} has a son called {o}.",
        "{s} picked up son {o} from school.",
    ],
    "daughter": [
        "{s} has a daughter called {o}.",
        "{s} told daughter {o} to wash up before dinner.",
    ],
    "husband": [
        "The husband of {s} is {o}.",
        "{s} cooked dinner for husband {o}.",
    ],
    "wife": [
        "The wife of {s} is {o}.",
        "{s} bought flowers for wife {o}.",
    ],
    "brother": [
        "{s} has a brother called {o}.",
        "{s} called brother {o} to catch up.",
    ],
    "sister": [
        "{s} has a sister called {o}.",
        "{s} went shopping with sister {o}.",
    ],
    "grandfather": ["The grandfather of {s} is {o}."],
    "grandmother": ["The grandmother of {s} is {o}."],
    "grandson": ["{s} has a grandson called {o}."],
    "granddaughter": ["{s} has a granddaughter called {o}."],
    "uncle": ["The uncle of {s} is {o}."],
    "aunt": ["The aunt of {s} is {o}."],
    "nephew": ["{s} has a nephew called {o}."],
    "niece": ["{s} has a niece called {o}."],
    "father-in-law": ["The father-in-law of {s} is {o}."],
    "mother-in-law": ["The mother-in-law of {s} is {o}."],
    "son-in-law": ["The son-in-law of {s} is {o}."],
    "daughter-in-law": ["The daughter-in-law of {s} is {o}."],
    "brother-in-law": ["The brother-in-law of {s} is {o}."],
    "sister-in-law": ["The sister-in-law of {s} is {o}."],
}

NAMES = {
    "male": [
        "James", "John", "Robert", "Michael", "William", "David", "Richard", "Joseph",
        "Thomas", "Charles", "George", "Donald", "Kenneth", "Steven", "Edward", "Brian",
        "Ronald", "Kevin", "Jason", "Gary", "Timothy", "Jose", "Larry", "Jeffrey",
        "Frank", "Scott", "Eric", "Stephen", "Raymond", "Gregory", "Joshua", "Dennis",
        "Walter", "Patrick", "Peter", "Harold", "Douglas", "Henry", "Carl", "Arthur",
        "Ryan", "Roger", "Joe", "Juan", "Jack", "Albert", "Jonathan", "Wayne",
    ],
    "female": [
        "Mary", "Patricia", "Linda", "Barbara", "Elizabeth", "Jennifer", "Maria",
        "Susan", "Margaret", "Dorothy", "Lisa", "Nancy", "Karen", "Betty", "Helen",
        "Sandra", "Donna", "Carol", "Ruth", "Sharon", "Michelle", "Laura", "Sarah",
        "Kimberly", "Deborah", "Jessica", "Shirley", "Cynthia", "Angela", "Melissa",
        "Brenda", "Amy", "Anna", "Rebecca", "Virginia", "Kathleen", "Pamela", "Martha",
        "Debra", "Amanda", "Stephanie", "Carolyn", "Christine", "Marie", "Janet",
        "Catherine", "Frances", "Ann",
    ],
}


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "kinship_schema.json").write_text(json.dumps(kinship_schema(), indent=2) + "\n")
    (DATA / "countries_schema.json").write_text(json.dumps(countries_schema(), indent=2) + "\n")
    (DATA / "kinship_composition.json").write_text(
        json.dumps(KINSHIP_COMPOSITION, indent=1) + "\n")
    (DATA / "countries_composition.json").write_text(
        json.dumps(COUNTRIES_COMPOSITION, indent=1) + "\n")
    (DATA / "countries_mini.tsv").write_text(countries_tsv())
    (DATA / "story_templates.json").write_text(json.dumps(STORY_TEMPLATES, indent=2) + "\n")
    (DATA / "names.json").write_text(json.dumps(NAMES, indent=2) + "\n")
    print("wrote data files to", DATA)


if __name__ == "__main__":
    main()
