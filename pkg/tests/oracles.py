"""Independent reference implementations shared by the tests."""


def _paths(dag, x, y):
    nbrs = {v: dag.parents(v) | dag.children(v) for v in dag.nodes}
    stack = [[x]]
    while stack:
        path = stack.pop()
        for w in nbrs[path[-1]]:
            if w == y:
                yield path + [y]
            elif w not in path:
                stack.append(path + [w])


def _descendants(dag, v):
    out, todo = set(), [v]
    while todo:
        for w in dag.children(todo.pop()):
            if w not in out:
                out.add(w)
                todo.append(w)
    return out


def _blocked(dag, path, z):
    for prev, mid, nxt in zip(path, path[1:], path[2:]):
        collider = prev in dag.parents(mid) and nxt in dag.parents(mid)
        if collider:
            if mid not in z and not (_descendants(dag, mid) & z):
                return True
        elif mid in z:
            return True
    return False


def brute_dsep(dag, x, y, z):
    """Exhaustive path-blocking oracle."""
    z = set(z)
    return all(_blocked(dag, p, z) for p in _paths(dag, x, y))
