#include "geonorm/pgm.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "geonorm/error.hpp"

namespace geonorm {

namespace {

struct Header {
  bool binary = false;
  int width = 0, height = 0, maxval = 0;
  std::optional<double> pitch;
  std::optional<Vec2> origin;
  double scale = 1.0;
};

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedHeader, what);
}

double parse_number(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    malformed("bad number in geonorm comment: " + s);
  }
  if (used != s.size() || !std::isfinite(v))
    malformed("bad number in geonorm comment: " + s);
  return v;
}

void parse_comment(const std::string& text, Header& h) {
  std::istringstream ss(text);
  std::string tag;
  if (!(ss >> tag) || tag != "geonorm") return;
  std::string tok;
  while (ss >> tok) {
    if (tok.rfind("pitch=", 0) == 0) {
      h.pitch = parse_number(tok.substr(6));
    } else if (tok.rfind("origin=", 0) == 0) {
      std::string y;
      if (!(ss >> y)) malformed("origin needs two coordinates");
      h.origin = Vec2(parse_number(tok.substr(7)), parse_number(y));
    } else if (tok.rfind("scale=", 0) == 0) {
      h.scale = parse_number(tok.substr(6));
      if (!(h.scale > 0.0)) malformed("scale must be positive");
    } else {
      malformed("unknown geonorm field: " + tok);
    }
  }
}

// Next header token, collecting comments along the way.
std::string next_token(std::istream& in, Header& h) {
  std::string tok;
  while (true) {
    const int c = in.peek();
    if (c == EOF) break;
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      parse_comment(line.substr(1), h);
      if (!tok.empty()) break;
      continue;
    }
    if (std::isspace(c)) {
      in.get();
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(in.get()));
  }
  return tok;
}

int parse_int(const std::string& s, const char* what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    malformed(std::string("bad ") + what + ": '" + s + "'");
  try {
    return std::stoi(s);
  } catch (const std::exception&) {
    malformed(std::string("bad ") + what + ": '" + s + "'");
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Raster read_image(std::istream& in) {
  Header h;
  const std::string magic = next_token(in, h);
  if (magic == "P5") h.binary = true;
  else if (magic != "P2") malformed("not a PGM file (magic '" + magic + "')");
  h.width = parse_int(next_token(in, h), "width");
  h.height = parse_int(next_token(in, h), "height");
  // The single whitespace after maxval is consumed by next_token.
  h.maxval = parse_int(next_token(in, h), "maxval");
  if (h.width < 1 || h.height < 1) malformed("empty image");
  if (h.maxval < 1 || h.maxval > 65535) malformed("maxval out of range");

  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  std::vector<double> v(n);
  const double unit = h.scale / h.maxval;
  if (h.binary) {
    const int bytes = h.maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(n * bytes);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
      throw Error(ErrorCode::IoError, "truncated PGM payload");
    for (std::size_t k = 0; k < n; ++k) {
      const unsigned q =
          bytes == 1 ? raw[k] : (unsigned(raw[2 * k]) << 8) | raw[2 * k + 1];
      if (q > static_cast<unsigned>(h.maxval))
        throw Error(ErrorCode::IoError, "sample exceeds maxval");
      v[k] = q * unit;
    }
  } else {
    for (std::size_t k = 0; k < n; ++k) {
      long q = -1;
      if (!(in >> q)) throw Error(ErrorCode::IoError, "truncated PGM payload");
      if (q < 0 || q > h.maxval)
        throw Error(ErrorCode::IoError, "sample exceeds maxval");
      v[k] = q * unit;
    }
  }
  OutGeometry g = OutGeometry::centered(h.width, h.height, h.pitch.value_or(1.0));
  if (h.pitch && !(*h.pitch > 0.0)) malformed("pitch must be positive");
  if (h.origin) g.origin = *h.origin;
  return Raster(g, std::move(v));
}

Raster read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_image(in);
}

void write_image(const Raster& r, std::ostream& out,
                 const PgmWriteOptions& opts) {
  if (opts.maxval < 1 || opts.maxval > 65535)
    throw Error(ErrorCode::InvalidArgument, "maxval must be in [1, 65535]");
  const double peak = r.peak();
  const double scale = opts.scale ? *opts.scale : (peak > 1.0 ? peak : 1.0);
  if (!(scale > 0.0))
    throw Error(ErrorCode::InvalidArgument, "scale must be positive");

  out << (opts.binary ? "P5" : "P2") << "\n";
  out << "# geonorm pitch=" << fmt(r.pitch()) << " origin="
      << fmt(r.origin().x()) << " " << fmt(r.origin().y()) << "\n";
  if (scale != 1.0) out << "# geonorm scale=" << fmt(scale) << "\n";
  out << r.width() << " " << r.height() << "\n" << opts.maxval << "\n";

  auto quantize = [&](double v) {
    const double q = std::nearbyint(v / scale * opts.maxval);
    return static_cast<unsigned>(std::clamp(q, 0.0, double(opts.maxval)));
  };
  const auto data = r.intensities();
  if (opts.binary) {
    const int bytes = opts.maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw;
    raw.reserve(data.size() * bytes);
    for (double v : data) {
      const unsigned q = quantize(v);
      if (bytes == 2) raw.push_back(static_cast<unsigned char>(q >> 8));
      raw.push_back(static_cast<unsigned char>(q & 0xff));
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
  } else {
    for (int i = 0; i < r.height(); ++i) {
      for (int j = 0; j < r.width(); ++j)
        out << (j ? " " : "") << quantize(r.at(i, j));
      out << "\n";
    }
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed");
}

void write_image(const Raster& r, const std::string& path,
                 const PgmWriteOptions& opts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  write_image(r, out, opts);
}

}  // namespace geonorm
