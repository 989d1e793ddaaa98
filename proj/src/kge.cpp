#include "kep/kge.hpp"

namespace kep {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kTransE:
      return "transe";
    case ModelKind::kHolE:
      return "hole";
    case ModelKind::kConvKB:
      return "convkb";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "transe") return ModelKind::kTransE;
  if (name == "hole") return ModelKind::kHolE;
  if (name == "convkb") return ModelKind::kConvKB;
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

std::string to_string(NormKind norm) { return norm == NormKind::kL1 ? "l1" : "l2"; }

NormKind parse_norm_kind(std::string_view name) {
  if (name == "l1" || name == "L1") return NormKind::kL1;
  if (name == "l2" || name == "L2") return NormKind::kL2;
  throw std::invalid_argument("unknown norm '" + std::string(name) + "'");
}

}  // namespace kep
