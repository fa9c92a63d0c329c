#include "fvpinn/swe.hpp"

#include <algorithm>
#include <string>

namespace fvpinn {

void PhysParams::validate() const {
  if (!(g > 0.0)) throw std::invalid_argument("gravity must be positive");
  if (!(rho > 0.0)) throw std::invalid_argument("density must be positive");
  if (!(h_min > 0.0)) throw std::invalid_argument("depth floor h_min must be positive");
  if (manning_n.empty()) throw std::invalid_argument("at least one Manning zone is required");
  for (double n : manning_n)
    if (!(n >= 0.0)) throw std::invalid_argument("Manning coefficients must be non-negative");
}

Bathymetry Bathymetry::from_mesh(const Mesh& mesh) {
  Bathymetry b;
  const auto nc = mesh.cells.size();
  b.z_b.resize(nc);
  b.h_s.resize(nc);
  b.bed_slope.assign(nc, Vec2{0.0, 0.0});
  for (std::size_t c = 0; c < nc; ++c) {
    b.z_b[c] = mesh.cells[c].z_b;
    b.h_s[c] = std::max(0.0, mesh.reference_ws - b.z_b[c]);
  }
  b.h_s_face.resize(mesh.faces.size());
  // Green-Gauss gradient of the face bed elevations.
  for (const Face& f : mesh.faces) {
    b.h_s_face[static_cast<std::size_t>(f.id)] = f.h_s;
    const double wx = f.z_b * f.length * f.normal[0];
    const double wy = f.z_b * f.length * f.normal[1];
    auto& l = b.bed_slope[static_cast<std::size_t>(f.left_cell)];
    l[0] -= wx;
    l[1] -= wy;
    if (!f.is_boundary()) {
      auto& r = b.bed_slope[static_cast<std::size_t>(f.right_cell)];
      r[0] += wx;
      r[1] += wy;
    }
  }
  for (std::size_t c = 0; c < nc; ++c) {
    b.bed_slope[c][0] /= mesh.cells[c].area;
    b.bed_slope[c][1] /= mesh.cells[c].area;
  }
  return b;
}

BoundaryData BoundaryData::from_mesh(const Mesh& mesh) {
  BoundaryData d;
  for (std::size_t p = 0; p < mesh.patches.size(); ++p) {
    const BoundaryPatch& patch = mesh.patches[p];
    BoundaryCondition bc;
    bc.kind = patch.kind;
    if (patch.kind == PatchKind::inlet_discharge) {
      const double w = mesh.patch_length(static_cast<int>(p));
      if (!(w > 0.0)) throw std::invalid_argument("inlet patch '" + patch.name + "' has no faces");
      bc.q_in = patch.value / w;
    } else if (patch.kind == PatchKind::exit_wse) {
      bc.xi_exit = patch.value - mesh.reference_ws;
    }
    d.patches.push_back(bc);
  }
  return d;
}

}  // namespace fvpinn
