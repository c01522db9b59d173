"""Seeded synthetic FAQ corpus and embedding generator.

Stands in for the published 125-thread web-application FAQ collection (one
original question plus ten manual paraphrases per thread) and for pre-trained
word vectors, neither of which can be fetched in an offline build. Threads
are (app, verb concept, object concept) tasks; paraphrases vary templates and
synonym surface forms. Generated vectors cluster synonyms: each concept gets
a base direction and each surface lemma a noisy unit copy of it, so the
semantic structure word vectors normally provide is present.

Everything is driven by numpy generators seeded from a single integer, so a
given seed reproduces the corpus and vectors bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingTable

EMBED_DIM = 64
SYNONYM_NOISE = 0.45

APPS = [
    "dropbox",
    "gmail",
    "spotify",
    "github",
    "trello",
    "slack",
    "zoom",
    "notion",
    "instagram",
    "paypal",
    "firefox",
    "whatsapp",
]

# verb concept -> surface forms as (base, -ing form); first entry is primary
VERBS: dict[str, list[tuple[str, str]]] = {
    "delete": [("delete", "deleting"), ("remove", "removing"), ("erase", "erasing")],
    "recover": [("recover", "recovering"), ("restore", "restoring"), ("retrieve", "retrieving")],
    "change": [("change", "changing"), ("modify", "modifying"), ("update", "updating")],
    "share": [("share", "sharing"), ("send", "sending"), ("forward", "forwarding")],
    "block": [("block", "blocking"), ("mute", "muting"), ("restrict", "restricting")],
    "merge": [("merge", "merging"), ("combine", "combining")],
    "split": [("split", "splitting"), ("divide", "dividing"), ("separate", "separating")],
    "sync": [("sync", "syncing"), ("synchronize", "synchronizing")],
    "export": [("export", "exporting"), ("download", "downloading")],
    "upload": [("upload", "uploading"), ("import", "importing")],
    "cancel": [("cancel", "canceling"), ("stop", "stopping"), ("disable", "disabling")],
    "enable": [("enable", "enabling"), ("activate", "activating")],
    "organize": [("organize", "organizing"), ("sort", "sorting"), ("arrange", "arranging")],
    "hide": [("hide", "hiding"), ("mask", "masking")],
    "protect": [("protect", "protecting"), ("secure", "securing"), ("lock", "locking")],
    "rename": [("rename", "renaming"), ("relabel", "relabeling")],
    "schedule": [("schedule", "scheduling"), ("postpone", "postponing")],
    "search": [("search", "searching"), ("find", "finding"), ("locate", "locating")],
    "transfer": [("transfer", "transferring"), ("move", "moving"), ("migrate", "migrating")],
    "track": [("track", "tracking"), ("monitor", "monitoring")],
}

# object concept -> surface forms as (singular, plural); first entry is primary
OBJECTS: dict[str, list[tuple[str, str]]] = {
    "password": [("password", "passwords"), ("passcode", "passcodes")],
    "account": [("account", "accounts"), ("profile", "profiles")],
    "message": [("message", "messages"), ("chat", "chats")],
    "conversation": [
        ("conversation", "conversations"),
        ("thread", "threads"),
        ("discussion", "discussions"),
    ],
    "file": [("file", "files"), ("document", "documents")],
    "folder": [("folder", "folders"), ("directory", "directories")],
    "photo": [("photo", "photos"), ("picture", "pictures"), ("image", "images")],
    "video": [("video", "videos"), ("clip", "clips")],
    "playlist": [("playlist", "playlists"), ("queue", "queues")],
    "notification": [("notification", "notifications"), ("alert", "alerts")],
    "contact": [("contact", "contacts"), ("friend", "friends")],
    "email": [("email", "emails"), ("mail", "mails")],
    "payment": [("payment", "payments"), ("transaction", "transactions")],
    "subscription": [("subscription", "subscriptions"), ("membership", "memberships")],
    "repository": [("repository", "repositories"), ("repo", "repos")],
    "branch": [("branch", "branches"), ("fork", "forks")],
    "board": [("board", "boards"), ("workspace", "workspaces")],
    "card": [("card", "cards"), ("task", "tasks")],
    "channel": [("channel", "channels"), ("group", "groups")],
    "meeting": [("meeting", "meetings"), ("call", "calls")],
    "storage": [("storage", "storages"), ("space", "spaces")],
    "backup": [("backup", "backups"), ("copy", "copies")],
    "note": [("note", "notes"), ("page", "pages")],
    "status": [("status", "statuses"), ("story", "stories")],
    "history": [("history", "histories"), ("log", "logs")],
    "bookmark": [("bookmark", "bookmarks"), ("favorite", "favorites")],
    "tab": [("tab", "tabs"), ("window", "windows")],
    "extension": [("extension", "extensions"), ("addon", "addons"), ("plugin", "plugins")],
    "setting": [("setting", "settings"), ("preference", "preferences")],
    "theme": [("theme", "themes"), ("layout", "layouts")],
    "language": [("language", "languages"), ("locale", "locales")],
    "device": [("device", "devices"), ("phone", "phones")],
}

# plausible (verb concept, object concept) combinations
_TASKS_BY_OBJECT: dict[str, list[str]] = {
    "password": ["recover", "change", "protect"],
    "account": ["delete", "recover", "protect", "rename"],
    "message": ["delete", "search", "recover", "schedule"],
    "conversation": ["split", "merge", "delete", "hide"],
    "file": ["share", "recover", "upload", "rename"],
    "folder": ["sync", "share", "rename", "organize"],
    "photo": ["export", "delete", "share", "upload"],
    "video": ["upload", "share", "delete", "export"],
    "playlist": ["share", "export", "organize", "merge"],
    "notification": ["enable", "hide", "cancel", "change"],
    "contact": ["block", "delete", "share", "sync"],
    "email": ["schedule", "search", "export", "block"],
    "payment": ["track", "cancel", "delete", "export"],
    "subscription": ["cancel", "change", "track"],
    "repository": ["delete", "rename", "transfer", "search"],
    "branch": ["merge", "delete", "rename", "protect"],
    "board": ["share", "organize", "export", "merge"],
    "card": ["transfer", "organize", "delete", "track"],
    "channel": ["search", "hide", "block", "organize"],
    "meeting": ["schedule", "cancel", "track", "delete"],
    "storage": ["transfer", "organize", "track"],
    "backup": ["upload", "recover", "schedule", "delete"],
    "note": ["organize", "share", "delete", "export"],
    "status": ["hide", "change", "delete"],
    "history": ["delete", "export", "search", "sync"],
    "bookmark": ["organize", "sync", "export", "delete"],
    "tab": ["organize", "merge", "hide"],
    "extension": ["enable", "delete", "change", "search"],
    "setting": ["change", "export", "sync", "search"],
    "theme": ["change", "enable", "share"],
    "language": ["change"],
    "device": ["sync", "transfer", "rename", "block"],
}

TASKS: list[tuple[str, str]] = [
    (verb, obj) for obj, verbs in _TASKS_BY_OBJECT.items() for verb in verbs
]

# Within-app thread pairs sharing one dominant object with different verbs:
# at coarse thresholds the verbs fall out of the keyword set and the pair
# collapses onto {app, object}, losing the distinguishing context. Cluster
# verbs need three surface forms so no single surface can dominate.
OBJECT_CLUSTERS = 14
CLUSTER_APP_RATE = (0.78, 0.95)
SINGLE_APP_RATE = (0.70, 0.95)
SINGLE_TASK_REUSE = 2  # a single task may appear in at most two apps

ADVERBS = [
    "quickly",
    "easily",
    "automatically",
    "manually",
    "permanently",
    "safely",
    "completely",
    "properly",
    "instantly",
    "correctly",
]

ADJECTIVES = [
    "old",
    "new",
    "large",
    "small",
    "important",
    "single",
    "multiple",
    "existing",
    "duplicate",
    "specific",
]

# extra content lemmas that templates introduce ("please" comes from the
# duplicate-question fallback suffix; like/compare/switch from cross-app
# reference suffixes)
TEMPLATE_WORDS = [
    "way",
    "best",
    "easiest",
    "easy",
    "help",
    "need",
    "want",
    "trouble",
    "possible",
    "please",
    "like",
    "compare",
    "switch",
]

# Most threads mention one other application in passing; the foreign app
# token scores below 0.15 but above 0.05, so only fine-threshold keyword
# sets pick up the cross-app contamination.
CROSS_REFERENCE_RATE = 0.85
CROSS_REFERENCE_SUFFIXES = [
    " like in {ref}",
    " compared to {ref}",
    " after switching from {ref}",
]

# templates mentioning the app
TEMPLATES_APP = [
    "How do I {verb} my {obj_sg} in {app}",
    "How can I {verb} the {obj_sg} on {app}",
    "Is it possible to {verb} {art} {obj_sg} in {app}",
    "Is there a way to {verb} {obj_pl} on {app}",
    "{verb_ing_cap} {obj_pl} in {app}",
    "{app_cap} {obj_sg} {verb_ing}",
    "How to {verb} {obj_pl} {adv} in {app}",
    "Why can't I {verb} my {obj_sg} in {app}",
    "I want to {verb} {adj} {obj_pl} on {app}",
    "Trouble {verb_ing} {art} {obj_sg} in {app}",
    "Need help {verb_ing} my {app} {obj_sg}",
]

# templates omitting the app
TEMPLATES_NOAPP = [
    "What is the best way to {verb} {art} {obj_sg}",
    "Can I {verb} {adj} {obj_pl}",
    "How do you {verb} {obj_pl}",
    "{verb_ing_cap} my {obj_sg} {adv}",
    "Need help {verb_ing} {obj_pl}",
    "Easiest way to {verb} {art} {obj_sg}",
    "Any way to {verb} {adj} {obj_pl}",
]


@dataclass(frozen=True)
class ThreadSpec:
    thread_id: int
    app: str
    verb_key: str
    obj_key: str
    verb_surfaces: tuple[int, ...]  # indices into VERBS[verb_key]
    obj_surfaces: tuple[int, ...]
    app_mention_rate: float
    clustered: bool


def _cluster_eligible_objects() -> list[str]:
    """Objects with at least two three-surface verbs available."""
    out = []
    for obj, verbs in _TASKS_BY_OBJECT.items():
        rich = [v for v in verbs if len(VERBS[v]) >= 3]
        if len(rich) >= 2:
            out.append(obj)
    return out


def _thread_specs(
    rng: np.random.Generator, threads: int = 125, clusters: int | None = None
) -> list[ThreadSpec]:
    """Assign tasks to apps: `clusters` same-object thread pairs, rest singles.

    Cluster pairs live inside one app, use the primary object surface and all
    three verb surfaces, so the object dominates the TF-IDF scale and both
    verbs drop out of coarse keyword sets. Single tasks may recur in a second
    app; their strong app mention keeps coarse sets distinct.
    """
    if clusters is None:
        clusters = min(OBJECT_CLUSTERS, threads // 4)
    per_app = [threads // len(APPS)] * len(APPS)
    for i in range(threads - sum(per_app)):
        per_app[i] += 1
    capacity = dict(zip(APPS, per_app))

    eligible = _cluster_eligible_objects()
    cluster_objs = [eligible[i] for i in rng.permutation(len(eligible))[:clusters]]

    assignments: list[tuple[str, tuple[str, str], bool]] = []
    app_tasks: dict[str, set[tuple[str, str]]] = {app: set() for app in APPS}
    for obj in cluster_objs:
        app = sorted(capacity, key=lambda a: (-capacity[a], APPS.index(a)))[0]
        rich = [v for v in _TASKS_BY_OBJECT[obj] if len(VERBS[v]) >= 3]
        pick = rng.permutation(len(rich))[:2]
        for vi in pick:
            task = (rich[vi], obj)
            capacity[app] -= 1
            app_tasks[app].add(task)
            assignments.append((app, task, True))

    pool = [t for t in TASKS if t[1] not in cluster_objs]
    queue = [pool[i] for i in rng.permutation(len(pool))] * SINGLE_TASK_REUSE
    remaining = threads - 2 * clusters
    while remaining > 0:
        app = sorted(capacity, key=lambda a: (-capacity[a], APPS.index(a)))[0]
        for qi, task in enumerate(queue):
            if task not in app_tasks[app]:
                queue.pop(qi)
                break
        else:
            raise ValueError("task pool exhausted")
        capacity[app] -= 1
        app_tasks[app].add(task)
        assignments.append((app, task, False))
        remaining -= 1
    assignments.sort(key=lambda t: APPS.index(t[0]))

    specs = []
    for tid, (app, (verb_key, obj_key), clustered) in enumerate(assignments):
        if clustered:
            verb_surfaces = tuple(range(len(VERBS[verb_key])))
            obj_surfaces: tuple[int, ...] = (0,)
            rate = float(rng.uniform(*CLUSTER_APP_RATE))
        else:
            n_verb = len(VERBS[verb_key])
            n_obj = len(OBJECTS[obj_key])
            verb_surfaces = (0,) if rng.random() < 0.25 else tuple(range(n_verb))
            obj_surfaces = (0,) if rng.random() < 0.40 else tuple(range(n_obj))
            rate = float(rng.uniform(*SINGLE_APP_RATE))
        specs.append(
            ThreadSpec(
                thread_id=tid,
                app=app,
                verb_key=verb_key,
                obj_key=obj_key,
                verb_surfaces=verb_surfaces,
                obj_surfaces=obj_surfaces,
                app_mention_rate=rate,
                clustered=clustered,
            )
        )
    return specs


def _pick_surface(rng: np.random.Generator, options: tuple[int, ...]) -> int:
    if len(options) == 1:
        return options[0]
    weights = np.array([0.5, 0.3, 0.2][: len(options)])
    weights = weights / weights.sum()
    return int(rng.choice(np.array(options), p=weights))


def _render_question(
    spec: ThreadSpec,
    template: str,
    rng: np.random.Generator,
    verb_surface: int | None = None,
) -> str:
    if verb_surface is None:
        verb_surface = _pick_surface(rng, spec.verb_surfaces)
    verb_base, verb_ing = VERBS[spec.verb_key][verb_surface]
    obj_sg, obj_pl = OBJECTS[spec.obj_key][_pick_surface(rng, spec.obj_surfaces)]
    text = template.format(
        verb=verb_base,
        verb_ing=verb_ing,
        verb_ing_cap=verb_ing.capitalize(),
        obj_sg=obj_sg,
        obj_pl=obj_pl,
        art="an" if obj_sg[0] in "aeiou" else "a",
        app=spec.app,
        app_cap=spec.app.capitalize(),
        adv=ADVERBS[rng.integers(0, len(ADVERBS))],
        adj=ADJECTIVES[rng.integers(0, len(ADJECTIVES))],
    )
    if rng.random() < 0.5:
        text += "?"
    return text


def _thread_questions(spec: ThreadSpec, rng: np.random.Generator, count: int = 11) -> list[str]:
    # Clustered threads rotate verb surfaces in balanced order so no surface's
    # count drifts high enough to survive coarse thresholds on its own.
    rotation: list[int] | None = None
    if spec.clustered:
        pattern = list(spec.verb_surfaces) * (count // len(spec.verb_surfaces) + 1)
        rotation = [pattern[i] for i in rng.permutation(count)]

    def surface_for(position: int) -> int | None:
        return rotation[position] if rotation is not None else None

    questions = [_render_question(spec, TEMPLATES_APP[0], rng, surface_for(0))]
    seen = {questions[0]}
    attempts = 0
    while len(questions) < count and attempts < 400:
        attempts += 1
        if rng.random() < spec.app_mention_rate:
            template = TEMPLATES_APP[rng.integers(0, len(TEMPLATES_APP))]
        else:
            template = TEMPLATES_NOAPP[rng.integers(0, len(TEMPLATES_NOAPP))]
        q = _render_question(spec, template, rng, surface_for(len(questions)))
        if q not in seen:
            seen.add(q)
            questions.append(q)
    while len(questions) < count:  # tiny surface space: allow duplicates as a last resort
        questions.append(
            _render_question(spec, TEMPLATES_APP[0], rng, surface_for(len(questions) - 1))
            + " please"
        )
    return questions


def generate_threads(seed: int = 11, threads: int = 125, questions_per_thread: int = 11) -> list[dict]:
    """Thread-structured dataset dump: question, answer, paraphrases per thread."""
    rng = np.random.default_rng(seed)
    out = []
    for spec in _thread_specs(rng, threads):
        qs = _thread_questions(spec, rng, questions_per_thread)
        if questions_per_thread > 2 and rng.random() < CROSS_REFERENCE_RATE:
            ref = APPS[rng.integers(0, len(APPS))]
            while ref == spec.app:
                ref = APPS[rng.integers(0, len(APPS))]
            suffix = CROSS_REFERENCE_SUFFIXES[rng.integers(0, len(CROSS_REFERENCE_SUFFIXES))]
            target = int(rng.integers(1, questions_per_thread))
            qs[target] = qs[target].rstrip("?") + suffix.format(ref=ref)
        verb = VERBS[spec.verb_key][0][0]
        obj = OBJECTS[spec.obj_key][0][0]
        answer = (
            f"To {verb} a {obj} in {spec.app}, open the {spec.app} settings, "
            f"locate the {obj} section, and follow the on-screen steps."
        )
        out.append({"question": qs[0], "answer": answer, "paraphrases": qs[1:]})
    return out


def threads_to_json(threads: list[dict]) -> str:
    return json.dumps(threads, indent=2, ensure_ascii=False, sort_keys=True) + "\n"


def vocabulary_lemmas() -> set[str]:
    """Every content lemma a generated question can produce after preprocessing."""
    lemmas = set(APPS)
    for surfaces in VERBS.values():
        lemmas.update(base for base, _ in surfaces)
    for surfaces in OBJECTS.values():
        lemmas.update(sg for sg, _ in surfaces)
    lemmas.update(ADVERBS)
    lemmas.update(ADJECTIVES)
    lemmas.update(TEMPLATE_WORDS)
    lemmas.discard("easiest")  # lemmatizes to easy
    return lemmas


def _third_person(verb: str) -> str:
    if verb.endswith(("s", "x", "z", "ch", "sh")):
        return verb + "es"
    if verb.endswith("y") and verb[-2] not in "aeiou":
        return verb[:-1] + "ies"
    return verb + "s"


def lexicon_pairs() -> dict[str, str]:
    """Surface-to-lemma pairs covering every inflection the generator emits."""
    pairs: dict[str, str] = {}
    for surfaces in VERBS.values():
        for base, ing in surfaces:
            pairs[ing] = base
            pairs[_third_person(base)] = base
    for surfaces in OBJECTS.values():
        for sg, pl in surfaces:
            pairs[pl] = sg
    pairs["easiest"] = "easy"
    pairs["easier"] = "easy"
    pairs["compared"] = "compare"
    pairs["switching"] = "switch"
    return pairs


def generate_embeddings(seed: int = 11, dim: int = EMBED_DIM) -> EmbeddingTable:
    """Unit vectors with synonym surfaces clustered around concept directions."""
    rng = np.random.default_rng(seed + 7919)
    concepts: dict[str, list[str]] = {}
    for key, surfaces in VERBS.items():
        concepts[f"verb:{key}"] = [base for base, _ in surfaces]
    for key, surfaces in OBJECTS.items():
        concepts[f"obj:{key}"] = [sg for sg, _ in surfaces]
    for app in APPS:
        concepts[f"app:{app}"] = [app]
    for word in [*ADVERBS, *ADJECTIVES, *TEMPLATE_WORDS]:
        if word == "easiest":
            continue
        concepts.setdefault(f"word:{word}", [word])

    vectors: dict[str, np.ndarray] = {}
    for concept in sorted(concepts):
        base = rng.standard_normal(dim)
        for lemma in concepts[concept]:
            if lemma in vectors:  # a lemma belongs to its first concept only
                continue
            vec = base + SYNONYM_NOISE * rng.standard_normal(dim)
            vectors[lemma] = (vec / np.linalg.norm(vec)).astype(np.float32)
    ordered = {token: vectors[token] for token in sorted(vectors)}
    return EmbeddingTable(dim=dim, vectors=ordered, oov_policy="hash-random")
