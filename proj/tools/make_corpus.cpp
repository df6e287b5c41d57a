// Regenerates the bundled synthetic portrait corpus (images + face
// candidate files) under a target directory. The repository ships the
// output at tests/data/corpus; rerun this tool if the scene definitions
// change.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <json.hpp>

#include "facegrade/png_io.hpp"
#include "facegrade/synthetic.hpp"

namespace {

using namespace facegrade;

void write_candidates(const std::string& path,
                      const std::vector<RectCandidate>& cands) {
  nlohmann::json j = nlohmann::json::array();
  for (const RectCandidate& c : cands)
    j.push_back({{"x", c.x}, {"y", c.y}, {"w", c.w}, {"h", c.h}});
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

void emit(const std::string& dir, const std::string& name,
          const PortraitSpec& spec) {
  save_png(dir + "/" + name + ".png", render_portrait(spec));
  write_candidates(dir + "/" + name + ".json", portrait_candidates(spec));
  std::cout << "wrote " << dir << "/" << name << ".{png,json}\n";
}

}  // namespace

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : "tests/data/corpus";
  std::filesystem::create_directories(dir);
  emit(dir, "target", corpus::target_spec());
  emit(dir, "input_tinted", corpus::tinted_input_spec());
  emit(dir, "input_skin_wall", corpus::skin_wall_input_spec());
  return 0;
}
