#pragma once

#include <stdexcept>
#include <string>

namespace ego3d {

/// Base class for every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define EGO3D_DEFINE_ERROR(Name, tag)                                  \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(tag, what) {}       \
  }

EGO3D_DEFINE_ERROR(DimensionError, "dimension");
EGO3D_DEFINE_ERROR(IndexError, "index");
EGO3D_DEFINE_ERROR(DegenerateLimbError, "degenerate_limb");
EGO3D_DEFINE_ERROR(ProjectionError, "projection_undefined");
EGO3D_DEFINE_ERROR(ParameterError, "parameter");
EGO3D_DEFINE_ERROR(FormatError, "format");
EGO3D_DEFINE_ERROR(SamplingError, "sampling");
EGO3D_DEFINE_ERROR(ConfigError, "config");
EGO3D_DEFINE_ERROR(AlignmentError, "alignment");
EGO3D_DEFINE_ERROR(TrainingError, "training");

#undef EGO3D_DEFINE_ERROR

}  // namespace ego3d
