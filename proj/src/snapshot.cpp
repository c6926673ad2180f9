#include "nullwave/snapshot.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nullwave {

namespace {

static_assert(sizeof(double) == 8);

void byteswap_if_needed(std::vector<double>& v) {
  if constexpr (std::endian::native == std::endian::little) {
    (void)v;
  } else {
    for (double& d : v) {
      std::uint64_t bits;
      std::memcpy(&bits, &d, 8);
      bits = __builtin_bswap64(bits);
      std::memcpy(&d, &bits, 8);
    }
  }
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_snapshot(const std::string& base, const GridState& state) {
  const GridSpec& spec = state.spec;
  {
    std::ofstream txt(base + ".txt");
    if (!txt) throw std::runtime_error(base + ".txt: cannot open");
    txt << "nullwave-snapshot schema=1\n";
    txt << "n " << spec.n << "\n";
    txt << "dx " << fmt17(spec.dx) << "\n";
    txt << "origin " << fmt17(spec.origin[0]) << " " << fmt17(spec.origin[1])
        << " " << fmt17(spec.origin[2]) << "\n";
    txt << "t " << fmt17(state.t) << "\n";
    txt << "m " << state.components() << "\n";
    txt << "periodic " << (spec.periodic ? 1 : 0) << "\n";
    txt << "layout row-major x1-fastest float64 little-endian; fields u then ut\n";
  }
  std::ofstream bin(base + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error(base + ".bin: cannot open");
  auto dump = [&](const GridField& f) {
    std::vector<double> buf = f.v;
    byteswap_if_needed(buf);
    bin.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * 8));
  };
  for (const auto& f : state.u) dump(f);
  for (const auto& f : state.ut) dump(f);
  if (!bin) throw std::runtime_error(base + ".bin: write failed");
}

GridState read_snapshot(const std::string& base) {
  std::ifstream txt(base + ".txt");
  if (!txt) throw std::runtime_error(base + ".txt: cannot open");
  GridSpec spec;
  double t = 0.0;
  int m = 0;
  std::string line;
  while (std::getline(txt, line)) {
    std::istringstream is(line);
    std::string key;
    if (!(is >> key)) continue;
    if (key == "n") is >> spec.n;
    else if (key == "dx") is >> spec.dx;
    else if (key == "origin") is >> spec.origin[0] >> spec.origin[1] >> spec.origin[2];
    else if (key == "t") is >> t;
    else if (key == "m") is >> m;
    else if (key == "periodic") {
      int p = 0;
      is >> p;
      spec.periodic = p != 0;
    }
  }
  if (spec.n <= 0 || m <= 0 || spec.dx <= 0.0) {
    throw std::runtime_error(base + ".txt: malformed header");
  }
  GridState state(spec, m);
  state.t = t;
  std::ifstream bin(base + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error(base + ".bin: cannot open");
  auto slurp = [&](GridField& f) {
    bin.read(reinterpret_cast<char*>(f.v.data()),
             static_cast<std::streamsize>(f.v.size() * 8));
    if (bin.gcount() != static_cast<std::streamsize>(f.v.size() * 8)) {
      throw std::runtime_error(base + ".bin: truncated");
    }
    byteswap_if_needed(f.v);
  };
  for (auto& f : state.u) slurp(f);
  for (auto& f : state.ut) slurp(f);
  return state;
}

}  // namespace nullwave
