#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "frugal/rng.hpp"
#include "frugal/table.hpp"

namespace testing_support {

// Nine auto93 cars, already in d2h order: 3 best, then 6 rest.
inline const char* kTable3 =
    "Clndrs,Volume,Model,origin,Lbs-,Acc+,Mpg+\n"
    "4,97,82,2,2130,24.6,40\n"
    "4,96,72,2,2189,18,30\n"
    "4,140,74,1,2542,17,30\n"
    "4,119,78,3,2300,14.7,30\n"
    "8,260,79,1,3420,22.2,20\n"
    "4,134,78,3,2515,14.8,20\n"
    "6,231,78,1,3380,15.8,20\n"
    "8,302,77,1,4295,14.9,20\n"
    "8,351,71,1,4154,13.5,10\n";

inline frugal::Dataset table3() { return frugal::read_csv_text(kTable3); }

inline std::filesystem::path data_dir() {
  if (const char* env = std::getenv("FRUGAL_DATA_DIR")) return env;
  return FRUGAL_SOURCE_DIR "/data";
}

inline std::string data_file(const std::string& name) { return (data_dir() / (name + ".csv")).string(); }

// Random mixed-type dataset: `nx` numeric x, one symbolic x, `ny` goals.
inline frugal::Dataset random_dataset(frugal::Rng& rng, std::size_t rows, std::size_t nx = 3, std::size_t ny = 2,
                                      double missing_rate = 0.0) {
  std::vector<std::string> header;
  for (std::size_t i = 0; i < nx; ++i) header.push_back("X" + std::to_string(i));
  header.push_back("kind");
  for (std::size_t i = 0; i < ny; ++i) header.push_back("G" + std::to_string(i) + (i % 2 ? "+" : "-"));
  frugal::Dataset d = frugal::Dataset::with_header(header);
  for (std::size_t r = 0; r < rows; ++r) {
    frugal::Row row{r, {}};
    for (std::size_t i = 0; i < nx; ++i) {
      if (rng.uniform() < missing_rate) row.cells.push_back(frugal::missing);
      else row.cells.push_back(std::round(rng.uniform() * 1000) / 10);
    }
    row.cells.push_back(std::string(1, static_cast<char>('a' + rng.below(4))));
    for (std::size_t i = 0; i < ny; ++i) row.cells.push_back(rng.uniform() * 100);
    d.add(std::move(row));
  }
  return d;
}

}  // namespace testing_support
