#pragma once

// Triangulations of framed 3-manifolds by truncated tetrahedra.
//
// Conventions: face f of a tetrahedron is the face opposite vertex f, and a
// pairing (tet, face) -> (to_tet, to_face) sends vertex v of `tet` to vertex
// perm[v] of `to_tet`.  Every pairing must be an odd permutation, which is
// what makes the glued manifold orientable with all tetrahedra positively
// oriented.

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gluesym::tri {

using Perm = std::array<int, 4>;

int perm_sign(const Perm& p);
Perm perm_inverse(const Perm& p);

// Shape slot carried by the tetrahedron edge {a, b}: 0 for z ({01},{23}),
// 1 for z' ({02},{13}), 2 for z'' ({03},{12}).
int edge_slot(int a, int b);
// Index 0..5 of the edge {a, b} in the order 01 02 03 12 13 23.
int edge_index(int a, int b);
std::pair<int, int> edge_vertices(int index);

struct FacePairing {
    int tet = 0, face = 0, to_tet = 0, to_face = 0;
    Perm perm{};
};

// One step of a normal path on a cusp cross-section: the path crosses the
// small triangle at (tet, vertex), entering through its small edge lying on
// face `enter` and leaving through the one on face `exit`.
struct NormalStep {
    int tet = 0, vertex = 0, enter = 0, exit = 0;
    bool operator==(const NormalStep&) const = default;
};
using NormalPath = std::vector<NormalStep>;

class Triangulation {
public:
    std::string name;
    int num_tetrahedra = 0;
    std::vector<FacePairing> gluings;
    std::optional<std::vector<int>> partial_glue_set;
    // Per cusp, a list of closed normal paths (normally two: alpha, beta).
    std::vector<std::vector<NormalPath>> peripheral_curves;

    // Validates and builds lookup tables; throws SchemaError, PairingError
    // or OrientationError.
    static Triangulation make(std::string name, int n, std::vector<FacePairing> gluings,
                              std::optional<std::vector<int>> glue_set = std::nullopt);

    // Pairing entry for (tet, face), or nullptr for a free face.
    const FacePairing* pairing(int tet, int face) const;
    // Whether (tet, face) is glued at stages M0 and Mprime.
    bool is_glued(int tet, int face) const { return glued_[4 * tet + face]; }
    bool fully_glued() const;
    int num_glued_faces() const;

    // Same tetrahedra and pairings with a different stage-M0 glue set,
    // given as a mask over the pairings (indices into `gluings`).
    Triangulation with_glue_set(const std::vector<int>& glue_set) const;

private:
    std::vector<int> pairing_of_;  // 4N entries, index into gluings or -1
    std::vector<char> glued_;      // 4N entries
};

Triangulation parse_triangulation(const std::string& document);
Triangulation load_triangulation(const std::string& path);
std::string to_json(const Triangulation& t);

// A corner of an edge class: the tetrahedron edge {a, b} of `tet`, oriented
// a -> b.  Successive incidences of a class are related by gluing the face
// c of (a, b, c, d) even, so a always maps to a.
struct EdgeCorner {
    int tet = 0, a = 0, b = 0;
    bool operator==(const EdgeCorner&) const = default;
};

struct EdgeClass {
    int id = 0;
    std::vector<EdgeCorner> incidences;
    // Closed: a full cycle around an internal edge.  Open: a chain whose two
    // ends sit on free faces.
    bool closed = false;
    int valence() const { return static_cast<int>(incidences.size()); }
};

std::vector<EdgeClass> edge_classes(const Triangulation& t);

enum class CuspTopology { sphere, torus, disc, annulus, other };
std::string to_string(CuspTopology t);

struct CuspClass {
    int id = 0;
    std::vector<std::pair<int, int>> small_triangles;  // (tet, vertex)
    int num_vertices = 0, num_edges = 0, num_faces = 0;
    int boundary_components = 0;
    CuspTopology topology = CuspTopology::other;
    int euler() const { return num_vertices - num_edges + num_faces; }
};

// Cusp cross-sections at the fully filled stage.  Throws
// NonAbelianSmallBoundary for a closed cross-section of genus >= 2.
std::vector<CuspClass> cusp_classes(const Triangulation& t);

// Lookup helpers shared by later modules.
struct EdgeLookup {
    std::vector<int> class_of;     // [6 * tet + edge_index]
    std::vector<int> position_of;  // position in the incidence list
    // Whether the corner's orientation agrees with the stored a -> b.
    std::vector<char> aligned;
};
EdgeLookup edge_lookup(const Triangulation& t, const std::vector<EdgeClass>& classes);

// Cusp id of each (tet, vertex), indexed 4 * tet + vertex.
std::vector<int> cusp_of_vertex(const std::vector<CuspClass>& cusps, int num_tetrahedra);

}  // namespace gluesym::tri
