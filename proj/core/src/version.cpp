#include "sdifl/version.hpp"

#include <png.h>

#include <Eigen/Core>

#include "sdifl/robustness.hpp"

namespace sdifl {

std::string library_version() { return SDIFL_VERSION; }

ComponentVersions component_versions() {
  return {library_version(),
          std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
              std::to_string(EIGEN_MINOR_VERSION),
          png_get_libpng_ver(nullptr), jpeg_codec_version()};
}

}  // namespace sdifl
