// one PASS/FAIL line per criterion, details indented below; the full report is also written to acceptance_report.txt
#include "hermite_lab/acceptance.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

int main(int argc, char** argv) {
  using namespace hlab::acceptance;
  std::ostringstream full;
  int failed = 0;
  for (auto& [id, run] : all_criteria()) {
    bool selected = argc < 2;
    for (int i = 1; i < argc; ++i) selected = selected || id == argv[i];
    if (!selected) continue;
    Criterion c;
    try {
      c = run();
    } catch (const std::exception& e) {
      c.id = id;
      c.pass = false;
      c.headline = std::string("error: ") + e.what();
    }
    if (!c.pass) ++failed;
    std::ostringstream s;
    s << line(c) << "  [" << hlab::fmt(std::round(c.seconds * 10) / 10) << " s]\n";
    for (auto& d : c.details) s << "    " << d << "\n";
    std::cout << s.str() << std::flush;
    full << s.str();
  }
  full << failed << " criteria FAIL\n";
  std::cout << failed << " criteria FAIL\n";
  std::ofstream("acceptance_report.txt") << full.str();
  return 0;
}
