#pragma once

namespace fvpinn {

/// Kernel execution policy. Both policies run the same blocked algorithm with
/// a fixed reduction order, so results are bitwise identical.
enum class Execution { serial, parallel };

}  // namespace fvpinn
