// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Exit status is 0 only when every selected criterion passes.
#include <CLI11.hpp>

#include <iostream>

#include "afflow/acceptance.hpp"

int main(int argc, char** argv) {
  namespace acc = afflow::acceptance;
  CLI::App app{"afflow acceptance suite"};
  std::vector<int> only;
  double scale = 1.0;
  app.add_option("--only", only, "criterion ids to run")->check(CLI::Range(1, 12));
  app.add_option("--tolerance-scale", scale, "multiplies every upper-bound threshold")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  if (only.empty())
    for (const auto& [id, name] : acc::Suite::catalogue()) only.push_back(id);

  acc::Suite suite(acc::Options{scale});
  int failed = 0;
  for (int id : only) {
    const acc::Result r = suite.run(id);
    std::cout << acc::format_line(r) << std::endl;
    if (!r.note.empty()) std::cout << "        note: " << r.note << std::endl;
    failed += r.pass ? 0 : 1;
  }
  std::cout << (only.size() - failed) << "/" << only.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
