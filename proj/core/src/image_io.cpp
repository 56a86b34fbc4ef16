#include "tpadmm/image_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace tpadmm {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw std::runtime_error("image: " + what);
}

// Skips whitespace and '#' comments, then reads one non-negative integer.
long header_int(std::istream& in, const char* what) {
  for (;;) {
    const int c = in.peek();
    if (c == std::char_traits<char>::eof()) fail(std::string("missing ") + what);
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    if (std::isspace(c)) {
      in.get();
      continue;
    }
    break;
  }
  long value = 0;
  if (!(in >> value) || value < 0) fail(std::string("malformed ") + what);
  return value;
}

int payload_byte(std::istream& in) {
  const int c = in.get();
  if (c == std::char_traits<char>::eof()) fail("truncated payload");
  return c;
}

std::string quoted_magic(char a, char b) {
  std::string s = "'";
  if (std::isprint(static_cast<unsigned char>(a))) s += a;
  if (std::isprint(static_cast<unsigned char>(b))) s += b;
  s += "'";
  return s;
}

const char kTraceHeader[] =
    "k,objective,violation,lambda_gap,ek_norm,accepted_source,t_used,psnr,"
    "wall_ms";

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& cell, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str() || *end != '\0') {
    std::ostringstream os;
    os << "trace: malformed number '" << cell << "' on line " << line_no;
    throw std::runtime_error(os.str());
  }
  return v;
}

}  // namespace

ImageGrid read_image(std::istream& in) {
  char p = 0, kind = 0;
  in >> p >> kind;
  if (!in || p != 'P' || (kind != '2' && kind != '3' && kind != '5' && kind != '6'))
    fail("unsupported magic " + quoted_magic(p, kind) +
         " (PGM P2/P5 and PPM P3/P6 only)");
  const bool binary = kind == '5' || kind == '6';
  const Index channels = (kind == '3' || kind == '6') ? 3 : 1;

  const long width = header_int(in, "width");
  const long height = header_int(in, "height");
  const long maxval = header_int(in, "maxval");
  if (width <= 0 || height <= 0) fail("image dimensions must be positive");
  if (maxval == 0) fail("maxval 0 is not representable");
  if (maxval < 0 || maxval > 65535) fail("maxval must lie in [1, 65535]");

  GridShape shape{static_cast<Index>(width), static_cast<Index>(height),
                  channels};
  const Index count = shape.size();
  Vec px(count);

  if (binary) {
    const int sep = in.get();  // single whitespace byte before the payload
    if (sep == std::char_traits<char>::eof() ||
        !std::isspace(static_cast<unsigned char>(sep)))
      fail("missing separator before binary payload");
    for (Index i = 0; i < count; ++i) {
      long sample = payload_byte(in);
      if (maxval > 255) sample = sample * 256 + payload_byte(in);
      px[i] = static_cast<double>(sample) / static_cast<double>(maxval);
    }
  } else {
    for (Index i = 0; i < count; ++i) {
      const long sample = header_int(in, "sample");
      px[i] = static_cast<double>(sample) / static_cast<double>(maxval);
    }
  }
  return ImageGrid::from_vec(shape, std::move(px), true);
}

ImageGrid read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '" + path + "'");
  return read_image(in);
}

void write_image(const ImageGrid& img, std::ostream& out, ImageFormat format) {
  if (format == ImageFormat::auto_detect) {
    if (img.shape.channels == 1)
      format = ImageFormat::pgm;
    else if (img.shape.channels == 3)
      format = ImageFormat::ppm;
    else {
      std::ostringstream os;
      os << "image: no netpbm format for " << img.shape.channels
         << " channels";
      throw std::invalid_argument(os.str());
    }
  }
  const Index want = format == ImageFormat::pgm ? 1 : 3;
  if (img.shape.channels != want) {
    std::ostringstream os;
    os << "image: " << (want == 1 ? "P5" : "P6") << " needs " << want
       << " channel(s), image has " << img.shape.channels;
    throw std::invalid_argument(os.str());
  }
  out << (format == ImageFormat::pgm ? "P5" : "P6") << "\n"
      << img.shape.width << " " << img.shape.height << "\n255\n";
  for (Index i = 0; i < img.pixels.size(); ++i) {
    const double v = std::min(1.0, std::max(0.0, img.pixels[i]));
    const int b = std::min(255, static_cast<int>(std::floor(v * 255.0 + 0.5)));
    out.put(static_cast<char>(static_cast<unsigned char>(b)));
  }
  if (!out) fail("write failed");
}

void write_image(const ImageGrid& img, const std::string& path,
                 ImageFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open '" + path + "' for writing");
  write_image(img, out, format);
}

void write_trace(const SolveTrace& trace, std::ostream& out) {
  out << kTraceHeader << "\n";
  for (const TraceRecord& r : trace.records) {
    out << r.k << ',' << fmt17(r.objective) << ',' << fmt17(r.violation) << ','
        << fmt17(r.lambda_gap) << ',' << fmt17(r.ek_norm) << ','
        << r.accepted_source << ',' << r.t_used << ','
        << (r.psnr ? fmt17(*r.psnr) : std::string()) << ','
        << fmt17(r.wall_ms) << "\n";
  }
  if (!out) throw std::runtime_error("trace: write failed");
}

void write_trace(const SolveTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("trace: cannot open '" + path + "'");
  write_trace(trace, out);
}

SolveTrace read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader)
    throw std::runtime_error("trace: unexpected header '" + line + "'");
  SolveTrace trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 9) {
      std::ostringstream os;
      os << "trace: expected 9 cells on line " << line_no << ", got "
         << cells.size();
      throw std::runtime_error(os.str());
    }
    TraceRecord r;
    r.k = static_cast<int>(parse_double(cells[0], line_no));
    r.objective = parse_double(cells[1], line_no);
    r.violation = parse_double(cells[2], line_no);
    r.lambda_gap = parse_double(cells[3], line_no);
    r.ek_norm = parse_double(cells[4], line_no);
    r.accepted_source = cells[5];
    r.t_used = static_cast<int>(parse_double(cells[6], line_no));
    if (!cells[7].empty()) r.psnr = parse_double(cells[7], line_no);
    r.wall_ms = parse_double(cells[8], line_no);
    trace.records.push_back(std::move(r));
  }
  return trace;
}

SolveTrace read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("trace: cannot open '" + path + "'");
  return read_trace(in);
}

}  // namespace tpadmm
