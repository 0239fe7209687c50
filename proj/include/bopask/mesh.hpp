#ifndef BOPASK_MESH_HPP
#define BOPASK_MESH_HPP

#include <array>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bopask/core.hpp"
#include "bopask/pose.hpp"

namespace bopask {

/// Triangle mesh, vertices in millimeters.
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;

    bool valid() const { return vertices.size() >= 4 && !faces.empty(); }

    Vec3 centroid() const {
        Vec3 c = Vec3::Zero();
        for (const Vec3& v : vertices) c += v;
        return vertices.empty() ? c : Vec3(c / static_cast<double>(vertices.size()));
    }

    double triangle_area(std::size_t f) const {
        const auto& t = faces[f];
        return 0.5 * (vertices[t[1]] - vertices[t[0]])
                         .cross(vertices[t[2]] - vertices[t[0]])
                         .norm();
    }

    // Unit normal oriented away from the mesh centroid; exact for convex
    // shapes, a serviceable approximation for the mostly-convex household
    // objects this pipeline sees. Pass the precomputed centroid in loops.
    Vec3 outward_normal(std::size_t f, const Vec3& at, const Vec3& mesh_centroid) const {
        const auto& t = faces[f];
        Vec3 n = (vertices[t[1]] - vertices[t[0]])
                     .cross(vertices[t[2]] - vertices[t[0]]);
        const double len = n.norm();
        if (len < 1e-12) return Vec3::UnitZ();
        n /= len;
        if (n.dot(at - mesh_centroid) < 0) n = -n;
        return n;
    }

    Vec3 outward_normal(std::size_t f, const Vec3& at) const {
        return outward_normal(f, at, centroid());
    }
};

struct SurfaceSample {
    Vec3 point;
    Vec3 normal;  // outward unit
};

struct RayHit {
    double t = 0;
    Vec3 point;
    Vec3 normal;  // outward unit
};

namespace detail {

inline std::optional<double> ray_triangle(const Vec3& orig, const Vec3& dir,
                                          const Vec3& v0, const Vec3& v1,
                                          const Vec3& v2) {
    constexpr double kEps = 1e-9;
    const Vec3 e1 = v1 - v0, e2 = v2 - v0;
    const Vec3 p = dir.cross(e2);
    const double det = e1.dot(p);
    if (std::abs(det) < kEps) return std::nullopt;
    const double inv = 1.0 / det;
    const Vec3 s = orig - v0;
    const double u = s.dot(p) * inv;
    if (u < -kEps || u > 1 + kEps) return std::nullopt;
    const Vec3 q = s.cross(e1);
    const double v = dir.dot(q) * inv;
    if (v < -kEps || u + v > 1 + kEps) return std::nullopt;
    const double t = e2.dot(q) * inv;
    if (t <= kEps) return std::nullopt;
    return t;
}

}  // namespace detail

/// Area-weighted surface sampler with deterministic draws from `rng`.
class MeshSampler {
public:
    explicit MeshSampler(const TriMesh& mesh)
        : mesh_(&mesh), centroid_(mesh.centroid()) {
        cumulative_.reserve(mesh.faces.size());
        double acc = 0.0;
        for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
            acc += mesh.triangle_area(f);
            cumulative_.push_back(acc);
        }
        total_area_ = acc;
    }

    double total_area() const { return total_area_; }

    SurfaceSample sample(Rng& rng) const {
        const double pick = rng.uniform() * total_area_;
        const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), pick);
        const std::size_t f =
            std::min<std::size_t>(it - cumulative_.begin(), cumulative_.size() - 1);
        const auto& tri = mesh_->faces[f];
        double r1 = std::sqrt(rng.uniform());
        double r2 = rng.uniform();
        const Vec3 p = (1 - r1) * mesh_->vertices[tri[0]] +
                       r1 * (1 - r2) * mesh_->vertices[tri[1]] +
                       r1 * r2 * mesh_->vertices[tri[2]];
        return {p, mesh_->outward_normal(f, p, centroid_)};
    }

private:
    const TriMesh* mesh_;
    Vec3 centroid_;
    std::vector<double> cumulative_;
    double total_area_ = 0;
};

/// Farthest intersection along the ray (the exit point when cast from the
/// surface into the body). Brute force over triangles.
inline std::optional<RayHit> raycast_farthest(const TriMesh& mesh, const Vec3& orig,
                                              const Vec3& dir) {
    std::optional<RayHit> best;
    const Vec3 centroid = mesh.centroid();
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& tri = mesh.faces[f];
        const auto t = detail::ray_triangle(orig, dir, mesh.vertices[tri[0]],
                                            mesh.vertices[tri[1]],
                                            mesh.vertices[tri[2]]);
        if (t && (!best || *t > best->t)) {
            const Vec3 p = orig + *t * dir;
            best = RayHit{*t, p, mesh.outward_normal(f, p, centroid)};
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Primitive mesh constructors (also used to synthesize BOP model files)
// ---------------------------------------------------------------------------

/// Axis-aligned box centered at the origin, outward winding.
inline TriMesh make_box_mesh(const Vec3& size) {
    TriMesh m;
    const Vec3 h = size * 0.5;
    for (int i = 0; i < 8; ++i)
        m.vertices.push_back({(i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(),
                              (i & 4) ? h.z() : -h.z()});
    static constexpr int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 4, 6, 2},
                                        {1, 3, 7, 5}, {0, 1, 5, 4}, {2, 6, 7, 3}};
    for (const auto& q : quads) {
        m.faces.push_back({q[0], q[1], q[2]});
        m.faces.push_back({q[0], q[2], q[3]});
    }
    return m;
}

/// Z-axis cylinder centered at the origin.
inline TriMesh make_cylinder_mesh(double diameter, double height, int segments = 32) {
    TriMesh m;
    const double r = diameter * 0.5, hz = height * 0.5;
    for (int i = 0; i < segments; ++i) {
        const double a = 2.0 * M_PI * i / segments;
        m.vertices.push_back({r * std::cos(a), r * std::sin(a), -hz});
        m.vertices.push_back({r * std::cos(a), r * std::sin(a), hz});
    }
    const int bottom_center = static_cast<int>(m.vertices.size());
    m.vertices.push_back({0, 0, -hz});
    const int top_center = bottom_center + 1;
    m.vertices.push_back({0, 0, hz});
    for (int i = 0; i < segments; ++i) {
        const int j = (i + 1) % segments;
        const int b0 = 2 * i, t0 = 2 * i + 1, b1 = 2 * j, t1 = 2 * j + 1;
        m.faces.push_back({b0, b1, t1});
        m.faces.push_back({b0, t1, t0});
        m.faces.push_back({bottom_center, b1, b0});
        m.faces.push_back({top_center, t0, t1});
    }
    return m;
}

// ---------------------------------------------------------------------------
// PLY io — positions required, every other attribute ignored
// ---------------------------------------------------------------------------

namespace detail {

struct PlyProperty {
    std::string type;   // scalar type, or list count type
    std::string type2;  // list element type when is_list
    std::string name;
    bool is_list = false;
};

inline std::size_t ply_type_size(const std::string& t) {
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
        t == "float32")
        return 4;
    if (t == "double" || t == "float64") return 8;
    throw IngestError(IngestCode::shape, "unknown PLY type: " + t);
}

inline double ply_read_binary_scalar(std::istream& in, const std::string& t) {
    unsigned char buf[8];
    const std::size_t n = ply_type_size(t);
    in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n));
    auto as = [&](auto value) {
        std::memcpy(&value, buf, sizeof(value));
        return static_cast<double>(value);
    };
    if (t == "char" || t == "int8") return as(std::int8_t{});
    if (t == "uchar" || t == "uint8") return as(std::uint8_t{});
    if (t == "short" || t == "int16") return as(std::int16_t{});
    if (t == "ushort" || t == "uint16") return as(std::uint16_t{});
    if (t == "int" || t == "int32") return as(std::int32_t{});
    if (t == "uint" || t == "uint32") return as(std::uint32_t{});
    if (t == "float" || t == "float32") return as(float{});
    return as(double{});
}

}  // namespace detail

inline TriMesh load_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError(IngestCode::missing, "cannot open PLY: " + path);

    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0)
        throw IngestError(IngestCode::shape, "not a PLY file: " + path);

    bool binary = false;
    struct Element {
        std::string name;
        std::size_t count = 0;
        std::vector<detail::PlyProperty> props;
    };
    std::vector<Element> elements;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "comment" || tok == "obj_info") continue;
        if (tok == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "binary_little_endian") binary = true;
            else if (fmt != "ascii")
                throw IngestError(IngestCode::shape, "unsupported PLY format " + fmt);
        } else if (tok == "element") {
            Element e;
            ls >> e.name >> e.count;
            elements.push_back(e);
        } else if (tok == "property") {
            if (elements.empty())
                throw IngestError(IngestCode::shape, "PLY property before element");
            detail::PlyProperty p;
            ls >> p.type;
            if (p.type == "list") {
                p.is_list = true;
                ls >> p.type >> p.type2;
            }
            ls >> p.name;
            elements.back().props.push_back(p);
        } else if (tok == "end_header") {
            break;
        }
    }

    TriMesh mesh;
    for (const Element& e : elements) {
        const bool is_vertex = e.name == "vertex";
        const bool is_face = e.name == "face";
        int ix = -1, iy = -1, iz = -1;
        for (std::size_t p = 0; p < e.props.size(); ++p) {
            if (e.props[p].name == "x") ix = static_cast<int>(p);
            if (e.props[p].name == "y") iy = static_cast<int>(p);
            if (e.props[p].name == "z") iz = static_cast<int>(p);
        }
        if (is_vertex && (ix < 0 || iy < 0 || iz < 0))
            throw IngestError(IngestCode::shape, "PLY vertex element lacks x/y/z");

        for (std::size_t i = 0; i < e.count; ++i) {
            std::vector<double> scalars(e.props.size(), 0.0);
            std::vector<long long> list_values;
            for (std::size_t p = 0; p < e.props.size(); ++p) {
                const auto& prop = e.props[p];
                if (prop.is_list) {
                    std::size_t n;
                    if (binary) {
                        n = static_cast<std::size_t>(
                            detail::ply_read_binary_scalar(in, prop.type));
                    } else {
                        in >> n;
                    }
                    list_values.resize(n);
                    for (std::size_t j = 0; j < n; ++j) {
                        double v = 0;
                        if (binary) v = detail::ply_read_binary_scalar(in, prop.type2);
                        else in >> v;
                        list_values[j] = static_cast<long long>(v);
                    }
                } else if (binary) {
                    scalars[p] = detail::ply_read_binary_scalar(in, prop.type);
                } else {
                    in >> scalars[p];
                }
            }
            if (!in) throw IngestError(IngestCode::shape, "truncated PLY: " + path);
            if (is_vertex) {
                mesh.vertices.push_back(
                    {scalars[static_cast<std::size_t>(ix)],
                     scalars[static_cast<std::size_t>(iy)],
                     scalars[static_cast<std::size_t>(iz)]});
            } else if (is_face && list_values.size() >= 3) {
                // fan-triangulate polygons
                for (std::size_t j = 1; j + 1 < list_values.size(); ++j)
                    mesh.faces.push_back({static_cast<int>(list_values[0]),
                                          static_cast<int>(list_values[j]),
                                          static_cast<int>(list_values[j + 1])});
            }
        }
    }
    for (const auto& f : mesh.faces)
        for (int idx : f)
            if (idx < 0 || idx >= static_cast<int>(mesh.vertices.size()))
                throw IngestError(IngestCode::shape, "PLY face index out of range");
    return mesh;
}

inline void save_ply(const TriMesh& mesh, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError(IngestCode::missing, "cannot write PLY: " + path);
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << mesh.vertices.size() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    out << "element face " << mesh.faces.size() << "\n";
    out << "property list uchar int vertex_indices\nend_header\n";
    char buf[96];
    for (const Vec3& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", v.x(), v.y(), v.z());
        out << buf;
    }
    for (const auto& f : mesh.faces)
        out << "3 " << f[0] << " " << f[1] << " " << f[2] << "\n";
}

}  // namespace bopask

#endif  // BOPASK_MESH_HPP
