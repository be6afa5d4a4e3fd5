"""Builders shared across test modules."""

from guideqa.kb import from_dict as kb_from_dict


def entity(eid, kind="term", name=None, **extra):
    raw = {"id": eid, "kind": kind, "name": name or eid.replace("_", " "),
           "synonyms": [], "definition": f"Definition of {eid}."}
    if kind == "parameter":
        raw.setdefault("unit", "kg")
        raw.setdefault("default_value", "1")
        raw.setdefault("applies_to", [])
    raw.update(extra)
    return raw


def section(sid, affinity="howto", **extra):
    raw = {"id": sid, "title": sid.replace("_", " "), "affinity": affinity,
           "body": f"Body of {sid}.", "link": None}
    raw.update(extra)
    return raw


def small_kb(n_terms=0, n_params=0, n_components=0, n_relationships=0, n_howto=0,
             with_singletons=True):
    entities = []
    for i in range(n_terms):
        entities.append(entity(f"term_{i}", "term"))
    for i in range(n_params):
        entities.append(entity(f"param_{i}", "parameter"))
    for i in range(n_components):
        entities.append(entity(f"component_{i}", "component"))
    for i in range(n_relationships):
        entities.append(entity(f"rel_{i}", "relationship"))
    sections = [section(f"howto_{i}") for i in range(n_howto)]
    if with_singletons:
        sections += [section("goal", affinity="goal"),
                     section("start", affinity="getting_started"),
                     section("sysreq", affinity="system_requirements")]
    return kb_from_dict({"entities": entities, "sections": sections})
