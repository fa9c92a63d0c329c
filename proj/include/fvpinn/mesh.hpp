#pragma once

// Unstructured polygonal mesh: storage, derived geometry, text I/O,
// benchmark generators and a geometric audit.

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fvpinn {

using Vec2 = std::array<double, 2>;

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Node {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double z_b = 0.0;
};

struct Cell {
  int id = 0;
  std::vector<int> node_ids;  // counter-clockwise
  Vec2 centroid{};
  double area = 0.0;
  double z_b = 0.0;  // mean of vertex bed elevations
  int manning_zone = 0;
};

enum class PatchKind { wall, inlet_discharge, exit_wse };

std::string to_string(PatchKind kind);
PatchKind patch_kind_from_string(const std::string& s);

struct Face {
  int id = 0;
  std::array<int, 2> node_pair{};
  int left_cell = -1;
  int left_edge = -1;   // local edge index in the left cell
  int right_cell = -1;  // -1 on the boundary
  int patch = -1;       // patch index for boundary faces
  Vec2 normal{};        // unit, outward from the left cell
  double length = 0.0;
  Vec2 midpoint{};
  double z_b = 0.0;     // mean of the two node bed elevations
  double h_s = 0.0;     // still-water depth max(0, reference_ws - z_b)

  bool is_boundary() const noexcept { return right_cell < 0; }
};

struct BoundaryPatch {
  std::string name;
  PatchKind kind = PatchKind::wall;
  double value = 0.0;  // total discharge Q (m^3/s) or water-surface elevation (m)
  std::vector<int> face_ids;
};

/// Face incidence of a cell; sign is +1 when the cell is the face's left
/// (normal points out of the cell) and -1 when it is the right cell.
struct CellFace {
  int face = 0;
  double sign = 1.0;
};

struct Mesh {
  std::vector<Node> nodes;
  std::vector<Cell> cells;
  std::vector<Face> faces;
  std::vector<BoundaryPatch> patches;
  double reference_ws = 0.0;

  std::vector<int> cell_face_offsets;  // CSR into cell_faces, size n_cells + 1
  std::vector<CellFace> cell_faces;

  int n_cells() const noexcept { return static_cast<int>(cells.size()); }
  int n_faces() const noexcept { return static_cast<int>(faces.size()); }

  std::span<const CellFace> faces_of(int cell) const;

  int find_patch(const std::string& name) const;  // -1 if absent
  double total_area() const;
  double patch_length(int patch) const;
  /// Index of the cell containing (x, y), or -1.
  int locate(double x, double y) const;
};

/// Raw topology input; build_mesh derives faces and geometry from it.
struct PatchEdges {
  std::string name;
  PatchKind kind = PatchKind::wall;
  double value = 0.0;
  std::vector<std::array<int, 2>> edges;  // (cell index, local edge)
};

Mesh build_mesh(std::vector<Node> nodes, std::vector<std::vector<int>> cell_nodes,
                std::vector<int> manning_zones, std::vector<PatchEdges> patches,
                double reference_ws);

/// Recomputes areas, centroids, normals, lengths, bed values and h_s from
/// the node coordinates. Throws MeshError for non-positive cell area.
void recompute_geometry(Mesh& mesh);

Mesh load_mesh(const std::string& path);
Mesh parse_mesh(const std::string& text);
std::string format_mesh(const Mesh& mesh);

using BedProfile = std::function<double(double x, double y)>;

/// Single row of rectangular cells on [0, length] x [0, width]. Patches
/// "left" and "right" (walls unless reconfigured) and walls "bottom", "top".
Mesh generate_strip_mesh(double length, int n_cells, double width, const BedProfile& bed,
                         double reference_ws);

struct Rect {
  double x0, y0, x1, y1;
};

/// Structured channel [0, lx] x [0, ly] with an optional block removed.
/// Grid lines are aligned with the block edges. Patches: "inlet" (x = 0),
/// "exit" (x = lx), "walls" (y = 0, y = ly) and "block" when present.
Mesh generate_channel_mesh(double lx, double ly, std::optional<Rect> block, double target_size,
                           const BedProfile& bed, double reference_ws);

struct AuditReport {
  double max_closure_defect = 0.0;  // max over cells of |sum_f sign l_f n_f|
  double min_area = 0.0;
  double max_normal_defect = 0.0;   // max | |n| - 1 |
  double area_sum = 0.0;
  int worst_cell = -1;
  bool passes = false;
};

AuditReport geometry_audit(const Mesh& mesh, double closure_tol = 1e-12,
                           double normal_tol = 1e-14);

}  // namespace fvpinn
