#pragma once

#include <string>

namespace sdifl {

struct ComponentVersions {
  std::string sdifl;
  std::string eigen;
  std::string libpng;
  std::string jpeg;
};

std::string library_version();
ComponentVersions component_versions();

}  // namespace sdifl
