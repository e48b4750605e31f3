FITNESS_FUNCTIONS = {
    "direct": {
        "name": "Direct - larger is better",
        "description": "Divides each value by the column maximum: x / max.",
    },
    "inverse": {
        "name": "Inverse - smaller is better",
        "description": (
            "Complements the direct fitness: 1 - x / max. The column "
            "maximum maps to 0."
        ),
    },
}

STRATEGIES = {
    "dombal": {
        "name": "DomBal - dominant genes, balanced organisms",
        "description": (
            "Depends only on the column means of the fitness matrix. Has a "
            "unique interior rest point known in closed form."
        ),
        "mix": {"g:dom": 1.0, "w:bal": 1.0},
    },
    "altsel": {
        "name": "AltSel - altruistic genes, selfish organisms",
        "description": (
            "Genes transfer fitness to kin genes and organisms reduce the "
            "fitness of kin organisms. Depends on second moments through "
            "the precomputed payoff matrices Dg, Dw and D."
        ),
        "mix": {"g:dom": 0.0, "w:bal": 0.0},
    },
    "mixed": {
        "name": "Mixed - convex blend of the four pure strategies",
        "description": (
            "Weights g:dom + g:alt = 1 and w:bal + w:sel = 1, given with "
            "--mix g:dom=..,w:bal=.."
        ),
        "mix": None,
    },
}

MIX_KEYS = ("g:dom", "g:alt", "w:bal", "w:sel")
