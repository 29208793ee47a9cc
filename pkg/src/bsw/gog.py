"""Graphs of groups, GADs, and Bass-Serre presentations.

Edge groups are free abelian (rank >= 1) throughout, which keeps edge
membership decidable.  Half-edges come in involution pairs; ``alpha`` is the
initial and ``tau`` the terminal vertex, with alpha(e) = tau(inv(e)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from bsw import dioph
from bsw import words as W
from bsw.words import Basis, Word
from bsw.normal import Morphism, Presentation

__all__ = [
    "Graph",
    "GraphOfGroups",
    "GAD",
    "SurfaceData",
    "BassSerrePresentation",
    "bass_serre_data",
    "maximal_subtree",
    "fundamental_presentation",
    "tree_change_map",
    "peripheral_subgroup",
    "dehn_twist",
    "modular_generators",
]


@dataclass(frozen=True)
class Graph:
    vertices: Tuple[str, ...]
    edges: Tuple[str, ...]  # half-edges
    inv: Dict[str, str]
    alpha: Dict[str, str]
    tau: Dict[str, str]

    def __post_init__(self):
        for e in self.edges:
            if self.inv[self.inv[e]] != e or self.inv[e] == e:
                raise ValueError(f"involution broken at {e}")
            if self.alpha[e] != self.tau[self.inv[e]]:
                raise ValueError(f"alpha/tau mismatch at {e}")
        if not self.is_connected():
            raise ValueError("graph must be connected")

    def is_connected(self) -> bool:
        if not self.vertices:
            return False
        seen = {self.vertices[0]}
        frontier = [self.vertices[0]]
        while frontier:
            v = frontier.pop()
            for e in self.edges:
                if self.alpha[e] == v and self.tau[e] not in seen:
                    seen.add(self.tau[e])
                    frontier.append(self.tau[e])
        return len(seen) == len(self.vertices)

    def orbit_reps(self):
        """One representative half-edge per {e, inv e} pair, in id order."""
        reps = []
        seen = set()
        for e in sorted(self.edges):
            if e in seen:
                continue
            seen.add(e)
            seen.add(self.inv[e])
            reps.append(e)
        return reps


@dataclass(frozen=True)
class BassSerrePresentation:
    """Presentation data relative to a spanning tree: the tree half-edges,
    one stable letter per remaining orbit, and the per-vertex conjugators
    (tree-path edge values from the base vertex, trivial on the tree)."""

    tree_edges: frozenset
    stable_letters: Dict[str, str]  # non-tree orbit rep -> letter name
    conjugators: Dict[str, Tuple[str, ...]]  # vertex -> tree path (half-edges)


def bass_serre_data(g: Graph, tree=None) -> BassSerrePresentation:
    if tree is None:
        tree = maximal_subtree(g)
    stable = {e: f"t_{e}" for e in g.orbit_reps() if e not in tree}
    base = min(g.vertices)
    paths = {base: ()}
    frontier = [base]
    while frontier:
        v = frontier.pop(0)
        for e in sorted(g.edges):
            if e in tree and g.alpha[e] == v and g.tau[e] not in paths:
                paths[g.tau[e]] = paths[v] + (e,)
                frontier.append(g.tau[e])
    return BassSerrePresentation(frozenset(tree), stable, paths)


def maximal_subtree(g: Graph) -> frozenset:
    """Deterministic spanning tree: breadth-first from the least vertex id,
    neighbours scanned in edge-id order.  Closed under the involution."""
    if not g.vertices:
        raise ValueError("empty graph")
    start = min(g.vertices)
    seen = {start}
    tree = set()
    frontier = [start]
    while frontier:
        nxt = []
        for v in sorted(frontier):
            for e in sorted(g.edges):
                if g.alpha[e] == v and g.tau[e] not in seen:
                    seen.add(g.tau[e])
                    tree.add(e)
                    tree.add(g.inv[e])
                    nxt.append(g.tau[e])
        frontier = nxt
    if len(seen) != len(g.vertices):
        raise ValueError("graph is disconnected")
    return frozenset(tree)


@dataclass(frozen=True)
class GraphOfGroups:
    graph: Graph
    vertex_groups: Dict[str, Presentation]
    edge_groups: Dict[str, Tuple[str, ...]]  # per orbit rep: edge-group gens
    edge_maps: Dict[str, Tuple[Word, ...]]  # per half-edge e: images in G_tau(e)

    def edge_gens(self, e: str) -> Tuple[str, ...]:
        inv = self.graph.inv[e]
        return self.edge_groups.get(e) or self.edge_groups[inv]

    def check(self) -> list:
        """Relator preservation and (where checkable) injectivity of edge maps."""
        report = []
        for e in self.graph.edges:
            gens = self.edge_gens(e)
            images = self.edge_maps[e]
            target = self.vertex_groups[self.graph.tau[e]]
            if len(images) != len(gens):
                raise ValueError(f"edge {e}: one image per edge generator")
            if target.is_free:
                # edge groups are free abelian: images must commute pairwise
                for i in range(len(images)):
                    for j in range(i + 1, len(images)):
                        if not W.commutes(images[i], images[j]):
                            report.append(
                                f"edge {e}: images do not commute (exact fail)")
                if len(images) == 1:
                    report.append(
                        f"edge {e}: injective={'yes' if not images[0].is_identity else 'NO'}")
                elif len(images) > 1:
                    # a free abelian group of rank >= 2 embeds in no free group
                    report.append(f"edge {e}: rank>=2 into free vertex (exact fail)")
            elif target.is_abelian:
                vecs = []
                for img in images:
                    vec = [0] * len(target.names)
                    for x in img.letters:
                        vec[abs(x) - 1] += 1 if x > 0 else -1
                    vecs.append(tuple(vec))
                lat = dioph.lattice_from_rows(vecs, len(target.names))
                inj = len(lat) == len(images)
                report.append(f"edge {e}: injective={'yes' if inj else 'NO'}")
            else:
                report.append(f"edge {e}: injectivity assumed")
        return report


@dataclass(frozen=True)
class SurfaceData:
    genus: int
    boundary_count: int
    boundary_words: Tuple[Word, ...]  # in the vertex group's generators
    twist_curves: Tuple[Word, ...] = ()


@dataclass(frozen=True)
class GAD:
    gog: GraphOfGroups
    partition: Dict[str, str]  # vertex -> "surface" | "abelian" | "rigid"
    surface_data: Dict[str, SurfaceData] = field(default_factory=dict)

    def __post_init__(self):
        for v, kind in self.partition.items():
            if kind == "abelian":
                pres = self.gog.vertex_groups[v]
                if not pres.is_abelian or len(pres.names) < 2:
                    raise ValueError(
                        f"abelian vertex {v} must be non-cyclic free abelian")
            if kind == "surface" and v not in self.surface_data:
                raise ValueError(f"surface vertex {v} needs surface data")


def fundamental_presentation(gog: GraphOfGroups, tree=None, eliminate=True):
    """Presentation of the fundamental group relative to a spanning tree.

    Generators: vertex-group generators in vertex order, then one stable
    letter per non-tree edge orbit.  Relations: vertex relators, then per
    orbit the edge relation f_e(a) = t_e f_ebar(a) t_e^-1 (t_e = 1 on the
    tree).  With ``eliminate``, generators occurring exactly once in exactly
    one relator are solved away (deterministically), which yields the usual
    amalgam presentations; the substitution map is returned alongside.

    Returns (presentation, subst) where subst maps every original generator
    name to its word in the returned presentation.
    """
    g = gog.graph
    if tree is None:
        tree = maximal_subtree(g)
    for e in g.edges:
        target_names = set(gog.vertex_groups[g.tau[e]].names)
        for img in gog.edge_maps[e]:
            stray = img.letter_names() - target_names
            if stray:
                raise ValueError(
                    f"edge {e}: image uses {sorted(stray)}, not generators "
                    f"of the target vertex {g.tau[e]}")
    names = []
    for v in g.vertices:
        for n in gog.vertex_groups[v].names:
            if n in names:
                raise ValueError(f"generator name {n} used by two vertex groups")
            names.append(n)
    stable = {}
    for e in g.orbit_reps():
        if e not in tree:
            t_name = f"t_{e}"
            if t_name in names:
                raise ValueError(f"stable-letter name {t_name} collides")
            names.append(t_name)
            stable[e] = t_name
    basis = Basis(tuple(names))
    relators = []
    for v in g.vertices:
        for r in gog.vertex_groups[v].relators:
            relators.append(_embed(r, basis))
    for e in g.orbit_reps():
        ebar = g.inv[e]
        gens = gog.edge_gens(e)
        for idx in range(len(gens)):
            fe = _embed(gog.edge_maps[e][idx], basis)
            febar = _embed(gog.edge_maps[ebar][idx], basis)
            if e in tree:
                rel = fe.inv() * febar
            else:
                t = basis.gen(stable[e])
                rel = fe.inv() * t * febar * t.inv()
            if not rel.is_identity:
                relators.append(rel)
    pres = Presentation(tuple(names), tuple(relators))
    subst = {n: pres.basis.gen(n) for n in names}
    if eliminate:
        pres, subst = _eliminate_single_occurrences(pres, subst)
    return pres, subst


def _embed(w: Word, basis: Basis) -> Word:
    return Word(basis, [(basis.index(w.basis.names[abs(x) - 1]) + 1)
                        * (1 if x > 0 else -1) for x in w.letters])


def _eliminate_single_occurrences(pres: Presentation, subst):
    """Deterministic Tietze elimination of single-occurrence generators."""
    names = list(pres.names)
    relators = list(pres.relators)
    while True:
        victim = None
        for ri, rel in enumerate(relators):
            counts = {}
            for x in rel.letters:
                counts[abs(x)] = counts.get(abs(x), 0) + 1
            # the highest-index candidate is the freshest (edge copies, stable
            # letters), keeping the original vertex generators in place
            for gi in sorted(counts, reverse=True):
                if counts[gi] == 1:
                    victim = (ri, gi)
                    break
            if victim:
                break
        if not victim:
            break
        ri, gi = victim
        rel = relators[ri]
        pos = next(i for i, x in enumerate(rel.letters) if abs(x) == gi)
        # rel = u g^s v  =>  g^s = u^-1 v^-1, g = (u^-1 v^-1)^s
        basis = rel.basis
        u = Word(basis, rel.letters[:pos], _reduced=True)
        v = Word(basis, rel.letters[pos + 1:], _reduced=True)
        s = 1 if rel.letters[pos] > 0 else -1
        expr = (u.inv() * v.inv()) if s == 1 else (v * u)
        gname = basis.names[gi - 1]
        new_names = tuple(n for n in names if n != gname)
        new_basis = Basis(new_names)
        repl = _substitute(expr, gname, None, new_basis)
        new_relators = []
        for rj, r in enumerate(relators):
            if rj == ri:
                continue
            nr = _substitute(r, gname, repl, new_basis)
            if not nr.is_identity:
                new_relators.append(nr)
        subst = {n: _substitute(w, gname, repl, new_basis)
                 for n, w in subst.items()}
        names = list(new_names)
        relators = new_relators
    out = Presentation(tuple(names), tuple(relators))
    return out, subst


def _substitute(w: Word, gname: str, repl: Optional[Word],
                new_basis: Basis) -> Word:
    letters = []
    for x in w.letters:
        name = w.basis.names[abs(x) - 1]
        if name == gname:
            if repl is None:
                raise ValueError("eliminated generator used in its own definition")
            seq = repl.letters if x > 0 else tuple(-y for y in reversed(repl.letters))
            letters.extend(seq)
        else:
            idx = new_basis.index(name) + 1
            letters.append(idx if x > 0 else -idx)
    return Word(new_basis, letters)


def tree_change_map(gog: GraphOfGroups, tree1, tree2):
    """The generator re-mapping between the presentations relative to two
    spanning trees.

    Built from the based-loop model: a vertex generator g at v maps to
    W_v g W_v^-1 and a stable letter of edge e to W_{alpha(e)} t_e W_{tau(e)}^-1,
    where W_v multiplies the tree1-path's edge values read in the tree2
    presentation.  Returns (p1, p2, mapping) over the uneliminated
    presentations.
    """
    g = gog.graph
    p1, _ = fundamental_presentation(gog, tree1, eliminate=False)
    p2, _ = fundamental_presentation(gog, tree2, eliminate=False)
    base = min(g.vertices)

    def edge_value(e, pres, tree):
        rep = e if e in set(g.orbit_reps()) else g.inv[e]
        if e in tree:
            return Word.identity(pres.basis)
        t = pres.basis.gen(f"t_{rep}")
        return t if e == rep else t.inv()

    # W_v: product of tree2-values along the tree1 path base -> v; the edge
    # relation f_e(a) = t_e f_ebar(a) t_e^-1 then transports as
    # g@v -> W_v^-1 g W_v and t_e -> W_tau(e)^-1 val2(e) W_alpha(e)
    paths = {base: Word.identity(p2.basis)}
    frontier = [base]
    while frontier:
        v = frontier.pop(0)
        for e in sorted(g.edges):
            if e in tree1 and g.alpha[e] == v and g.tau[e] not in paths:
                paths[g.tau[e]] = paths[v] * edge_value(e, p2, tree2)
                frontier.append(g.tau[e])
    mapping = {}
    for v in g.vertices:
        for n in gog.vertex_groups[v].names:
            mapping[n] = paths[v].inv() * p2.basis.gen(n) * paths[v]
    for e in g.orbit_reps():
        if e not in tree1:
            mapping[f"t_{e}"] = (paths[g.tau[e]].inv()
                                 * edge_value(e, p2, tree2)
                                 * paths[g.alpha[e]])
    return p1, p2, Morphism(p1, p2, mapping, "tree-change")


def peripheral_subgroup(gad: GAD, v: str):
    """(P, Pbar): the incident-edge-image lattice of an abelian vertex and its
    saturation, both as row-HNF bases."""
    if gad.partition.get(v) != "abelian":
        raise ValueError(f"vertex {v} is not abelian")
    pres = gad.gog.vertex_groups[v]
    rank = len(pres.names)
    vecs = []
    for e in gad.gog.graph.edges:
        if gad.gog.graph.tau[e] != v:
            continue
        for img in gad.gog.edge_maps[e]:
            vec = [0] * rank
            for x in img.letters:
                vec[abs(x) - 1] += 1 if x > 0 else -1
            vecs.append(tuple(vec))
    p = dioph.lattice_from_rows(vecs, rank)
    if not p:
        return (), ()
    # saturation via Smith form: with the basis as columns M and S = L M R,
    # the column space is L^-1 span(d_i e_i), so its saturation is spanned by
    # the first rank(P) columns of L^-1
    cols = tuple(zip(*p))
    s, left, right = dioph.snf(cols)
    r = sum(1 for i in range(min(len(s), len(s[0]) if s else 0)) if s[i][i])
    n = len(cols)
    left_inv = _unimodular_inverse(left)
    sat_cols = [tuple(left_inv[i][j] for i in range(n)) for j in range(r)]
    pbar = dioph.lattice_from_rows(sat_cols, rank)
    return p, pbar


def _unimodular_inverse(m):
    """Exact inverse of a unimodular integer matrix via adjugate."""
    n = len(m)
    det = dioph.mat_det(m)
    if det not in (1, -1):
        raise ValueError("matrix is not unimodular")
    inv = []
    for i in range(n):
        row = []
        for j in range(n):
            minor = tuple(tuple(m[a][b] for b in range(n) if b != i)
                          for a in range(n) if a != j)
            cof = dioph.mat_det(minor) * (-1 if (i + j) % 2 else 1)
            row.append(cof * det)
        inv.append(tuple(row))
    return tuple(inv)


def dehn_twist(gog: GraphOfGroups, g_elt: Word, conjugated_vertex: str,
               pres: Optional[Presentation] = None, check=True):
    """Dehn twist of a one-edge splitting.

    Amalgam: fixes the other vertex group, conjugates ``conjugated_vertex``'s
    generators by g_elt.  HNN (single vertex): fixes the vertex group and
    sends the stable letter t to t * g_elt.  g_elt must centralize the edge
    image; this is checked in the free group (sufficient) and otherwise
    reported.
    """
    graph = gog.graph
    reps = graph.orbit_reps()
    if len(reps) != 1:
        raise ValueError("dehn_twist expects a one-edge splitting")
    e = reps[0]
    if pres is None:
        pres, _ = fundamental_presentation(gog, eliminate=False)
    basis = pres.basis
    g_elt = g_elt.lift(basis) if g_elt.basis != basis else g_elt
    if check:
        edge_img = _embed(gog.edge_maps[e][0], basis)
        if not W.commutes(g_elt, edge_img):
            from bsw.normal import rewrite_trivial
            comm = W.commutator(g_elt, edge_img)
            if rewrite_trivial(comm, pres.relators) is None:
                raise ValueError(
                    "twisting element does not visibly centralize the edge group")
    images = {}
    tree = maximal_subtree(graph)
    if e in tree:  # amalgam
        for v in graph.vertices:
            for n in gog.vertex_groups[v].names:
                gen = basis.gen(n)
                images[n] = g_elt * gen * g_elt.inv() if v == conjugated_vertex \
                    else gen
    else:  # HNN
        for v in graph.vertices:
            for n in gog.vertex_groups[v].names:
                images[n] = basis.gen(n)
        images[f"t_{e}"] = basis.gen(f"t_{e}") * g_elt
    return Morphism(pres, pres, images, f"twist({g_elt})")


def modular_generators(gad: GAD, h_gens=(), h_vertex=None):
    """Generating automorphisms of the modular group relative to a subgroup
    declared (by the caller) to lie in ``h_vertex``.

    Inner automorphisms by every generator; unimodular shears of abelian
    vertices fixing the peripheral saturation; Dehn twists in edge-group
    elements for one-edge collapses (tree edges of tree-shaped graphs);
    declared boundary-parallel surface twists.  Returns (morphisms, notes).
    """
    gog = gad.gog
    pres, _ = fundamental_presentation(gog, eliminate=False)
    basis = pres.basis
    autos = []
    notes = []
    for n in pres.names:
        g = basis.gen(n)
        autos.append(Morphism(
            pres, pres, {m: g * basis.gen(m) * g.inv() for m in pres.names},
            f"inner({n})"))
    # unimodular shears of abelian vertices fixing the peripheral saturation
    for v in gog.graph.vertices:
        if gad.partition.get(v) != "abelian":
            continue
        vp = gog.vertex_groups[v]
        _, pbar = peripheral_subgroup(gad, v)
        rank = len(vp.names)
        pivots = {next(j for j, x in enumerate(row) if x) for row in pbar}
        for row in pbar:
            for j in range(rank):
                if j in pivots:
                    continue
                # x_j -> x_j + (row vector); fixes the saturation pointwise
                images = {m: basis.gen(m) for m in pres.names}
                target = basis.gen(vp.names[j])
                for k, c in enumerate(row):
                    target = target * basis.gen(vp.names[k]) ** c
                images[vp.names[j]] = target
                autos.append(Morphism(pres, pres, images,
                                      f"shear({v},{vp.names[j]})"))
    # Dehn twists per edge orbit
    tree = maximal_subtree(gog.graph)
    reps = gog.graph.orbit_reps()
    for e in reps:
        if len(reps) == 1:
            sub = gog
            target_vertex = gog.graph.tau[e]
            if h_vertex == target_vertex:
                target_vertex = gog.graph.alpha[e]
            autos.append(dehn_twist(sub, _embed(gog.edge_maps[e][0], basis),
                                    target_vertex, pres, check=False))
        elif e in tree and len(reps) == len(gog.graph.vertices) - 1:
            # tree-shaped graph: collapse everything except this edge
            twist = _collapsed_twist(gad, e, pres, h_vertex)
            if twist is not None:
                autos.append(twist)
        else:
            notes.append(f"edge {e}: collapse not implemented for non-tree edges")
    # declared surface twists
    for v, data in gad.surface_data.items():
        for curve in data.twist_curves:
            vp = gog.vertex_groups[v]
            incident = [e for e in gog.graph.edges if gog.graph.tau[e] == v]
            boundary_like = any(
                W.is_conjugate_cyclic(curve, img)[0]
                or W.is_conjugate_cyclic(curve, img.inv())[0]
                for e in incident for img in gog.edge_maps[e])
            if not boundary_like:
                notes.append(f"surface {v}: twist along non-boundary curve "
                             f"{curve} not supported")
                continue
            g_elt = _embed(curve, basis)
            images = {m: basis.gen(m) for m in pres.names}
            for n in vp.names:
                images[n] = g_elt * basis.gen(n) * g_elt.inv()
            autos.append(Morphism(pres, pres, images, f"btwist({v},{curve})"))
    return autos, notes


def _collapsed_twist(gad: GAD, e, pres, h_vertex):
    """Twist in the edge-group element of a one-edge collapse of a tree GAD:
    conjugates every vertex group on the far side of e by the edge image."""
    gog = gad.gog
    graph = gog.graph
    # component of tau(e) after removing {e, inv e}
    far = {graph.tau[e]}
    frontier = [graph.tau[e]]
    banned = {e, graph.inv[e]}
    while frontier:
        v = frontier.pop()
        for d in graph.edges:
            if d in banned or graph.alpha[d] != v:
                continue
            if graph.tau[d] not in far:
                far.add(graph.tau[d])
                frontier.append(graph.tau[d])
    if h_vertex is not None and h_vertex in far:
        far = set(graph.vertices) - far
        e = graph.inv[e]
    g_elt = _embed(gog.edge_maps[e][0], pres.basis)
    images = {}
    for v in graph.vertices:
        for n in gog.vertex_groups[v].names:
            gen = pres.basis.gen(n)
            images[n] = g_elt * gen * g_elt.inv() if v in far else gen
    for name in pres.names:
        if name not in images:  # stable letters stay put on tree collapses
            images[name] = pres.basis.gen(name)
    return Morphism(pres, pres, images, f"collapse-twist({e})")
