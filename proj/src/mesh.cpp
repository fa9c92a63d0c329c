#include "fvpinn/mesh.hpp"
#include "fvpinn/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace fvpinn {

std::string to_string(PatchKind kind) {
  switch (kind) {
    case PatchKind::wall:
      return "wall";
    case PatchKind::inlet_discharge:
      return "inlet_discharge";
    case PatchKind::exit_wse:
      return "exit_wse";
  }
  return "wall";
}

PatchKind patch_kind_from_string(const std::string& s) {
  if (s == "wall") return PatchKind::wall;
  if (s == "inlet_discharge") return PatchKind::inlet_discharge;
  if (s == "exit_wse") return PatchKind::exit_wse;
  throw MeshError("unknown patch kind '" + s + "'");
}

std::span<const CellFace> Mesh::faces_of(int cell) const {
  const auto b = static_cast<std::size_t>(cell_face_offsets[static_cast<std::size_t>(cell)]);
  const auto e = static_cast<std::size_t>(cell_face_offsets[static_cast<std::size_t>(cell) + 1]);
  return {cell_faces.data() + b, e - b};
}

int Mesh::find_patch(const std::string& name) const {
  for (std::size_t p = 0; p < patches.size(); ++p)
    if (patches[p].name == name) return static_cast<int>(p);
  return -1;
}

double Mesh::total_area() const {
  double a = 0.0;
  for (const Cell& c : cells) a += c.area;
  return a;
}

double Mesh::patch_length(int patch) const {
  double l = 0.0;
  for (int f : patches[static_cast<std::size_t>(patch)].face_ids)
    l += faces[static_cast<std::size_t>(f)].length;
  return l;
}

int Mesh::locate(double x, double y) const {
  // Point is inside a convex or simple CCW polygon when it is left of, or on,
  // every edge; non-convex cells fall back to the crossing test.
  for (const Cell& c : cells) {
    const std::size_t n = c.node_ids.size();
    bool inside = false;
    for (std::size_t k = 0, j = n - 1; k < n; j = k++) {
      const Node& a = nodes[static_cast<std::size_t>(c.node_ids[k])];
      const Node& b = nodes[static_cast<std::size_t>(c.node_ids[j])];
      if ((a.y > y) != (b.y > y)) {
        const double xc = (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x;
        if (x < xc) inside = !inside;
      }
    }
    if (inside) return c.id;
  }
  // Points exactly on the outer boundary: nearest centroid among cells whose
  // bounding box contains the point.
  int best = -1;
  double best_d = 0.0;
  for (const Cell& c : cells) {
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (int v : c.node_ids) {
      const Node& nd = nodes[static_cast<std::size_t>(v)];
      x0 = std::min(x0, nd.x);
      x1 = std::max(x1, nd.x);
      y0 = std::min(y0, nd.y);
      y1 = std::max(y1, nd.y);
    }
    if (x < x0 || x > x1 || y < y0 || y > y1) continue;
    const double d = std::hypot(x - c.centroid[0], y - c.centroid[1]);
    if (best < 0 || d < best_d) {
      best = c.id;
      best_d = d;
    }
  }
  return best;
}

void recompute_geometry(Mesh& mesh) {
  for (Cell& c : mesh.cells) {
    const std::size_t n = c.node_ids.size();
    double a2 = 0.0, cx = 0.0, cy = 0.0, zb = 0.0;
    // Shoelace about the first vertex keeps the centroid well conditioned.
    const Node& o = mesh.nodes[static_cast<std::size_t>(c.node_ids[0])];
    for (std::size_t k = 0; k < n; ++k) {
      const Node& p = mesh.nodes[static_cast<std::size_t>(c.node_ids[k])];
      const Node& q = mesh.nodes[static_cast<std::size_t>(c.node_ids[(k + 1) % n])];
      const double px = p.x - o.x, py = p.y - o.y, qx = q.x - o.x, qy = q.y - o.y;
      const double cr = px * qy - qx * py;
      a2 += cr;
      cx += (px + qx) * cr;
      cy += (py + qy) * cr;
      zb += p.z_b;
    }
    if (!(a2 > 0.0))
      throw MeshError("cell " + std::to_string(c.id) + " has non-positive area (" +
                      std::to_string(0.5 * a2) + "); vertices must be counter-clockwise");
    c.area = 0.5 * a2;
    c.centroid = {o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2)};
    c.z_b = zb / static_cast<double>(n);
  }
  for (Face& f : mesh.faces) {
    const Node& a = mesh.nodes[static_cast<std::size_t>(f.node_pair[0])];
    const Node& b = mesh.nodes[static_cast<std::size_t>(f.node_pair[1])];
    const double dx = b.x - a.x, dy = b.y - a.y;
    f.length = std::hypot(dx, dy);
    if (!(f.length > 0.0)) throw MeshError("face " + std::to_string(f.id) + " has zero length");
    f.normal = {dy / f.length, -dx / f.length};
    f.midpoint = {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
    f.z_b = 0.5 * (a.z_b + b.z_b);
    f.h_s = std::max(0.0, mesh.reference_ws - f.z_b);
  }
}

Mesh build_mesh(std::vector<Node> nodes, std::vector<std::vector<int>> cell_nodes,
                std::vector<int> manning_zones, std::vector<PatchEdges> patches,
                double reference_ws) {
  Mesh mesh;
  mesh.reference_ws = reference_ws;
  mesh.nodes = std::move(nodes);
  const int n_nodes = static_cast<int>(mesh.nodes.size());
  for (int i = 0; i < n_nodes; ++i) {
    Node& nd = mesh.nodes[static_cast<std::size_t>(i)];
    nd.id = i;
    if (!std::isfinite(nd.x) || !std::isfinite(nd.y) || !std::isfinite(nd.z_b))
      throw MeshError("node " + std::to_string(i) + " has non-finite coordinates");
  }

  mesh.cells.resize(cell_nodes.size());
  // Faces are keyed by the sorted node pair; the first owner is the left cell
  // and fixes the orientation of the stored node pair.
  std::map<std::pair<int, int>, int> face_of_edge;
  for (std::size_t c = 0; c < cell_nodes.size(); ++c) {
    Cell& cell = mesh.cells[c];
    cell.id = static_cast<int>(c);
    cell.node_ids = std::move(cell_nodes[c]);
    cell.manning_zone = c < manning_zones.size() ? manning_zones[c] : 0;
    const std::size_t k = cell.node_ids.size();
    if (k < 3) throw MeshError("cell " + std::to_string(c) + " has fewer than 3 vertices");
    for (int v : cell.node_ids)
      if (v < 0 || v >= n_nodes)
        throw MeshError("cell " + std::to_string(c) + " references unknown node " +
                        std::to_string(v));
    // Orientation first, so a clockwise cell is reported as such rather than
    // as an edge-direction clash with its neighbour.
    double a2 = 0.0;
    for (std::size_t e = 0; e < k; ++e) {
      const Node& p = mesh.nodes[static_cast<std::size_t>(cell.node_ids[e])];
      const Node& q = mesh.nodes[static_cast<std::size_t>(cell.node_ids[(e + 1) % k])];
      a2 += p.x * q.y - q.x * p.y;
    }
    if (!(a2 > 0.0))
      throw MeshError("cell " + std::to_string(c) + " has non-positive area (" +
                      std::to_string(0.5 * a2) + "); vertices must be counter-clockwise");
    for (std::size_t e = 0; e < k; ++e) {
      const int a = cell.node_ids[e];
      const int b = cell.node_ids[(e + 1) % k];
      const auto key = std::minmax(a, b);
      auto it = face_of_edge.find({key.first, key.second});
      if (it == face_of_edge.end()) {
        Face f;
        f.id = static_cast<int>(mesh.faces.size());
        f.node_pair = {a, b};
        f.left_cell = cell.id;
        f.left_edge = static_cast<int>(e);
        face_of_edge.emplace(std::make_pair(key.first, key.second), f.id);
        mesh.faces.push_back(f);
      } else {
        Face& f = mesh.faces[static_cast<std::size_t>(it->second)];
        if (f.right_cell >= 0)
          throw MeshError("topology error: edge (" + std::to_string(a) + ", " +
                          std::to_string(b) + ") is shared by more than two cells");
        if (f.node_pair[0] != b || f.node_pair[1] != a)
          throw MeshError("topology error: cells " + std::to_string(f.left_cell) + " and " +
                          std::to_string(cell.id) + " traverse a shared edge in the same "
                          "direction (inconsistent orientation)");
        f.right_cell = cell.id;
      }
    }
  }

  for (const PatchEdges& pe : patches) {
    BoundaryPatch bp;
    bp.name = pe.name;
    bp.kind = pe.kind;
    bp.value = pe.value;
    const int pidx = static_cast<int>(mesh.patches.size());
    for (const auto& [c, e] : pe.edges) {
      if (c < 0 || c >= mesh.n_cells())
        throw MeshError("patch '" + pe.name + "' references unknown cell " + std::to_string(c));
      const Cell& cell = mesh.cells[static_cast<std::size_t>(c)];
      const int k = static_cast<int>(cell.node_ids.size());
      if (e < 0 || e >= k)
        throw MeshError("patch '" + pe.name + "' references edge " + std::to_string(e) +
                        " of cell " + std::to_string(c));
      const int a = cell.node_ids[static_cast<std::size_t>(e)];
      const int b = cell.node_ids[static_cast<std::size_t>((e + 1) % k)];
      const auto key = std::minmax(a, b);
      Face& f = mesh.faces[static_cast<std::size_t>(face_of_edge.at({key.first, key.second}))];
      if (!f.is_boundary())
        throw MeshError("patch '" + pe.name + "' lists interior edge " + std::to_string(c) +
                        ":" + std::to_string(e));
      if (f.patch >= 0)
        throw MeshError("boundary face " + std::to_string(f.id) + " belongs to two patches");
      f.patch = pidx;
      bp.face_ids.push_back(f.id);
    }
    mesh.patches.push_back(std::move(bp));
  }
  for (const Face& f : mesh.faces)
    if (f.is_boundary() && f.patch < 0)
      throw MeshError("boundary face " + std::to_string(f.id) + " (cell " +
                      std::to_string(f.left_cell) + " edge " + std::to_string(f.left_edge) +
                      ") is not assigned to any patch");

  mesh.cell_face_offsets.assign(mesh.cells.size() + 1, 0);
  for (const Face& f : mesh.faces) {
    ++mesh.cell_face_offsets[static_cast<std::size_t>(f.left_cell) + 1];
    if (!f.is_boundary()) ++mesh.cell_face_offsets[static_cast<std::size_t>(f.right_cell) + 1];
  }
  for (std::size_t c = 0; c < mesh.cells.size(); ++c)
    mesh.cell_face_offsets[c + 1] += mesh.cell_face_offsets[c];
  mesh.cell_faces.resize(static_cast<std::size_t>(mesh.cell_face_offsets.back()));
  std::vector<int> fill(mesh.cell_face_offsets.begin(), mesh.cell_face_offsets.end() - 1);
  for (const Face& f : mesh.faces) {
    mesh.cell_faces[static_cast<std::size_t>(fill[static_cast<std::size_t>(f.left_cell)]++)] = {
        f.id, 1.0};
    if (!f.is_boundary())
      mesh.cell_faces[static_cast<std::size_t>(fill[static_cast<std::size_t>(f.right_cell)]++)] =
          {f.id, -1.0};
  }

  recompute_geometry(mesh);
  return mesh;
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-empty, non-comment line tokenised; throws at end of input.
  std::istringstream next(const char* what) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      return std::istringstream(line);
    }
    fail(std::string("unexpected end of file, expected ") + what);
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw MeshError("mesh parse error at line " + std::to_string(line_no_) + ": " + msg);
  }

  template <class T>
  T read(std::istringstream& s, const char* what) const {
    T v{};
    if (!(s >> v)) fail(std::string("expected ") + what);
    return v;
  }

  void expect_keyword(std::istringstream& s, const char* kw) const {
    std::string tok;
    if (!(s >> tok) || tok != kw) fail(std::string("expected keyword ") + kw);
  }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

}  // namespace

Mesh parse_mesh(const std::string& text) {
  std::istringstream in(text);
  LineReader r(in);

  auto hdr = r.next("SWEMESH header");
  r.expect_keyword(hdr, "SWEMESH");
  if (r.read<int>(hdr, "format version") != 1) r.fail("unsupported SWEMESH version");

  auto ws = r.next("REF_WS");
  r.expect_keyword(ws, "REF_WS");
  const double reference_ws = r.read<double>(ws, "reference water surface");

  auto nh = r.next("NODES");
  r.expect_keyword(nh, "NODES");
  const int n_nodes = r.read<int>(nh, "node count");
  if (n_nodes < 3) r.fail("need at least 3 nodes");
  std::vector<Node> nodes(static_cast<std::size_t>(n_nodes));
  std::vector<bool> seen(static_cast<std::size_t>(n_nodes), false);
  for (int i = 0; i < n_nodes; ++i) {
    auto s = r.next("node record");
    const int id = r.read<int>(s, "node id");
    if (id < 0 || id >= n_nodes || seen[static_cast<std::size_t>(id)])
      r.fail("node id " + std::to_string(id) + " out of range or duplicated");
    seen[static_cast<std::size_t>(id)] = true;
    Node& nd = nodes[static_cast<std::size_t>(id)];
    nd.x = r.read<double>(s, "x");
    nd.y = r.read<double>(s, "y");
    nd.z_b = r.read<double>(s, "z_b");
  }

  auto ch = r.next("CELLS");
  r.expect_keyword(ch, "CELLS");
  const int n_cells = r.read<int>(ch, "cell count");
  if (n_cells < 1) r.fail("need at least one cell");
  std::vector<std::vector<int>> cell_nodes(static_cast<std::size_t>(n_cells));
  std::vector<int> zones(static_cast<std::size_t>(n_cells), 0);
  std::vector<bool> cseen(static_cast<std::size_t>(n_cells), false);
  for (int i = 0; i < n_cells; ++i) {
    auto s = r.next("cell record");
    const int id = r.read<int>(s, "cell id");
    if (id < 0 || id >= n_cells || cseen[static_cast<std::size_t>(id)])
      r.fail("cell id " + std::to_string(id) + " out of range or duplicated");
    cseen[static_cast<std::size_t>(id)] = true;
    const int k = r.read<int>(s, "vertex count");
    if (k < 3) r.fail("cell needs at least 3 vertices");
    auto& v = cell_nodes[static_cast<std::size_t>(id)];
    for (int j = 0; j < k; ++j) {
      const int nid = r.read<int>(s, "vertex id");
      if (nid < 0 || nid >= n_nodes) r.fail("vertex id " + std::to_string(nid) + " unknown");
      v.push_back(nid);
    }
    zones[static_cast<std::size_t>(id)] = r.read<int>(s, "manning zone");
  }

  auto ph = r.next("PATCHES");
  r.expect_keyword(ph, "PATCHES");
  const int n_patches = r.read<int>(ph, "patch count");
  std::vector<PatchEdges> patches;
  for (int i = 0; i < n_patches; ++i) {
    auto s = r.next("patch record");
    PatchEdges pe;
    pe.name = r.read<std::string>(s, "patch name");
    const auto kind = r.read<std::string>(s, "patch kind");
    try {
      pe.kind = patch_kind_from_string(kind);
    } catch (const MeshError& e) {
      r.fail(e.what());
    }
    pe.value = r.read<double>(s, "patch value");
    const int nf = r.read<int>(s, "patch face count");
    for (int j = 0; j < nf; ++j) {
      const auto tok = r.read<std::string>(s, "cell:edge");
      const auto colon = tok.find(':');
      if (colon == std::string::npos) r.fail("malformed edge reference '" + tok + "'");
      try {
        pe.edges.push_back({std::stoi(tok.substr(0, colon)), std::stoi(tok.substr(colon + 1))});
      } catch (const std::exception&) {
        r.fail("malformed edge reference '" + tok + "'");
      }
    }
    patches.push_back(std::move(pe));
  }

  return build_mesh(std::move(nodes), std::move(cell_nodes), std::move(zones),
                    std::move(patches), reference_ws);
}

Mesh load_mesh(const std::string& path) { return parse_mesh(read_file(path)); }

std::string format_mesh(const Mesh& mesh) {
  std::ostringstream o;
  o.precision(17);
  o << "SWEMESH 1\n";
  o << "REF_WS " << mesh.reference_ws << "\n";
  o << "NODES " << mesh.nodes.size() << "\n";
  for (const Node& n : mesh.nodes) o << n.id << ' ' << n.x << ' ' << n.y << ' ' << n.z_b << "\n";
  o << "CELLS " << mesh.cells.size() << "\n";
  for (const Cell& c : mesh.cells) {
    o << c.id << ' ' << c.node_ids.size();
    for (int v : c.node_ids) o << ' ' << v;
    o << ' ' << c.manning_zone << "\n";
  }
  o << "PATCHES " << mesh.patches.size() << "\n";
  for (const BoundaryPatch& p : mesh.patches) {
    o << p.name << ' ' << to_string(p.kind) << ' ' << p.value << ' ' << p.face_ids.size();
    for (int f : p.face_ids) {
      const Face& face = mesh.faces[static_cast<std::size_t>(f)];
      o << ' ' << face.left_cell << ':' << face.left_edge;
    }
    o << "\n";
  }
  return o.str();
}

Mesh generate_strip_mesh(double length, int n_cells, double width, const BedProfile& bed,
                         double reference_ws) {
  if (!(length > 0.0) || !(width > 0.0) || n_cells < 1)
    throw MeshError("strip mesh needs positive length, width and cell count");
  const int nx = n_cells + 1;
  std::vector<Node> nodes(static_cast<std::size_t>(2 * nx));
  for (int i = 0; i < nx; ++i) {
    const double x = length * static_cast<double>(i) / static_cast<double>(n_cells);
    for (int j = 0; j < 2; ++j) {
      Node& nd = nodes[static_cast<std::size_t>(j * nx + i)];
      nd.x = x;
      nd.y = j == 0 ? 0.0 : width;
      nd.z_b = bed ? bed(nd.x, nd.y) : 0.0;
    }
  }
  std::vector<std::vector<int>> cells;
  PatchEdges left{"left", PatchKind::wall, 0.0, {}}, right{"right", PatchKind::wall, 0.0, {}};
  PatchEdges bottom{"bottom", PatchKind::wall, 0.0, {}}, top{"top", PatchKind::wall, 0.0, {}};
  for (int i = 0; i < n_cells; ++i) {
    // Local edges: 0 bottom, 1 right, 2 top, 3 left.
    cells.push_back({i, i + 1, nx + i + 1, nx + i});
    bottom.edges.push_back({i, 0});
    top.edges.push_back({i, 2});
  }
  left.edges.push_back({0, 3});
  right.edges.push_back({n_cells - 1, 1});
  return build_mesh(std::move(nodes), std::move(cells), {},
                    {std::move(left), std::move(right), std::move(bottom), std::move(top)},
                    reference_ws);
}

namespace {

// Splits [lo, hi] at the given interior breakpoints, each piece into
// ceil(len / target) equal intervals.
std::vector<double> graded_lines(double lo, double hi, std::vector<double> breaks, double target) {
  breaks.push_back(lo);
  breaks.push_back(hi);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  std::vector<double> lines{lo};
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const double a = breaks[s], b = breaks[s + 1];
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / target - 1e-9)));
    for (int k = 1; k <= n; ++k)
      lines.push_back(k == n ? b : a + (b - a) * static_cast<double>(k) / static_cast<double>(n));
  }
  return lines;
}

}  // namespace

Mesh generate_channel_mesh(double lx, double ly, std::optional<Rect> block, double target_size,
                           const BedProfile& bed, double reference_ws) {
  if (!(lx > 0.0) || !(ly > 0.0) || !(target_size > 0.0))
    throw MeshError("channel mesh needs positive dimensions and target size");
  std::vector<double> bx, by;
  if (block) {
    const Rect& b = *block;
    if (!(b.x0 > 0.0 && b.x1 < lx && b.y0 > 0.0 && b.y1 < ly && b.x0 < b.x1 && b.y0 < b.y1))
      throw MeshError("block must lie strictly inside the channel");
    if (target_size > b.x1 - b.x0 || target_size > b.y1 - b.y0)
      throw MeshError("target size is larger than the block");
    bx = {b.x0, b.x1};
    by = {b.y0, b.y1};
  }
  const std::vector<double> xs = graded_lines(0.0, lx, bx, target_size);
  const std::vector<double> ys = graded_lines(0.0, ly, by, target_size);
  const int ni = static_cast<int>(xs.size()), nj = static_cast<int>(ys.size());

  std::vector<Node> nodes(static_cast<std::size_t>(ni * nj));
  for (int j = 0; j < nj; ++j)
    for (int i = 0; i < ni; ++i) {
      Node& nd = nodes[static_cast<std::size_t>(j * ni + i)];
      nd.x = xs[static_cast<std::size_t>(i)];
      nd.y = ys[static_cast<std::size_t>(j)];
      nd.z_b = bed ? bed(nd.x, nd.y) : 0.0;
    }
  auto removed = [&](int i, int j) {
    if (!block) return false;
    const double cx = 0.5 * (xs[static_cast<std::size_t>(i)] + xs[static_cast<std::size_t>(i) + 1]);
    const double cy = 0.5 * (ys[static_cast<std::size_t>(j)] + ys[static_cast<std::size_t>(j) + 1]);
    return cx > block->x0 && cx < block->x1 && cy > block->y0 && cy < block->y1;
  };

  std::vector<std::vector<int>> cells;
  std::vector<int> cell_at(static_cast<std::size_t>((ni - 1) * (nj - 1)), -1);
  for (int j = 0; j + 1 < nj; ++j)
    for (int i = 0; i + 1 < ni; ++i) {
      if (removed(i, j)) continue;
      cell_at[static_cast<std::size_t>(j * (ni - 1) + i)] = static_cast<int>(cells.size());
      cells.push_back({j * ni + i, j * ni + i + 1, (j + 1) * ni + i + 1, (j + 1) * ni + i});
    }
  PatchEdges inlet{"inlet", PatchKind::wall, 0.0, {}}, exit{"exit", PatchKind::wall, 0.0, {}};
  PatchEdges walls{"walls", PatchKind::wall, 0.0, {}}, blk{"block", PatchKind::wall, 0.0, {}};
  auto at = [&](int i, int j) -> int {
    if (i < 0 || j < 0 || i >= ni - 1 || j >= nj - 1) return -2;  // outside the channel
    return cell_at[static_cast<std::size_t>(j * (ni - 1) + i)];    // -1 inside the block
  };
  for (int j = 0; j + 1 < nj; ++j)
    for (int i = 0; i + 1 < ni; ++i) {
      const int c = at(i, j);
      if (c < 0) continue;
      // Local edges: 0 south, 1 east, 2 north, 3 west.
      const std::array<std::array<int, 2>, 4> nb{{{i, j - 1}, {i + 1, j}, {i, j + 1}, {i - 1, j}}};
      for (int e = 0; e < 4; ++e) {
        const int o = at(nb[static_cast<std::size_t>(e)][0], nb[static_cast<std::size_t>(e)][1]);
        if (o >= 0) continue;
        if (o == -1)
          blk.edges.push_back({c, e});
        else if (e == 3)
          inlet.edges.push_back({c, e});
        else if (e == 1)
          exit.edges.push_back({c, e});
        else
          walls.edges.push_back({c, e});
      }
    }
  std::vector<PatchEdges> patches{std::move(inlet), std::move(exit), std::move(walls)};
  if (block) patches.push_back(std::move(blk));
  return build_mesh(std::move(nodes), std::move(cells), {}, std::move(patches), reference_ws);
}

AuditReport geometry_audit(const Mesh& mesh, double closure_tol, double normal_tol) {
  AuditReport r;
  r.min_area = mesh.cells.empty() ? 0.0 : mesh.cells.front().area;
  for (const Face& f : mesh.faces)
    r.max_normal_defect =
        std::max(r.max_normal_defect, std::fabs(std::hypot(f.normal[0], f.normal[1]) - 1.0));
  for (const Cell& c : mesh.cells) {
    double sx = 0.0, sy = 0.0;
    for (const CellFace& cf : mesh.faces_of(c.id)) {
      const Face& f = mesh.faces[static_cast<std::size_t>(cf.face)];
      sx += cf.sign * f.length * f.normal[0];
      sy += cf.sign * f.length * f.normal[1];
    }
    const double d = std::max(std::fabs(sx), std::fabs(sy));
    if (d > r.max_closure_defect || r.worst_cell < 0) {
      r.max_closure_defect = std::max(r.max_closure_defect, d);
      r.worst_cell = c.id;
    }
    r.min_area = std::min(r.min_area, c.area);
    r.area_sum += c.area;
  }
  r.passes = r.max_closure_defect <= closure_tol && r.max_normal_defect <= normal_tol &&
             r.min_area > 0.0;
  return r;
}

}  // namespace fvpinn
