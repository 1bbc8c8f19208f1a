#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "eit/errors.hpp"
#include "eit/mesh.hpp"

namespace eit {

// One conductivity inclusion. Shapes must sit strictly inside the unit disk
// and values must be positive. Where inclusions overlap, the one listed
// later in the phantom wins.
struct Inclusion {
  enum class Shape { Disk, Annulus, Polygon };
  Shape shape = Shape::Disk;
  double value = 1.0;

  // disk and annulus
  double cx = 0.0, cy = 0.0;
  double radius = 0.0;          // disk
  double r_in = 0.0, r_out = 0.0;  // annulus
  // polygon
  std::vector<Vec2> vertices;

  bool contains(double x, double y) const {
    switch (shape) {
      case Shape::Disk: {
        const double dx = x - cx, dy = y - cy;
        return dx * dx + dy * dy <= radius * radius;
      }
      case Shape::Annulus: {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        return d2 >= r_in * r_in && d2 <= r_out * r_out;
      }
      case Shape::Polygon: {
        // Even-odd crossing rule.
        bool in = false;
        const size_t n = vertices.size();
        for (size_t i = 0, j = n - 1; i < n; j = i++) {
          const Vec2& a = vertices[i];
          const Vec2& b = vertices[j];
          if ((a.y > y) != (b.y > y)) {
            const double xc = a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (x < xc) in = !in;
          }
        }
        return in;
      }
    }
    return false;
  }

  void validate() const {
    if (!(value > 0.0)) throw ParameterError("Inclusion: value must be > 0");
    switch (shape) {
      case Shape::Disk:
        if (!(radius > 0.0)) throw ParameterError("Inclusion: disk radius must be > 0");
        if (!(std::hypot(cx, cy) + radius < 1.0))
          throw ParameterError("Inclusion: disk must lie strictly inside the unit disk");
        break;
      case Shape::Annulus:
        if (!(r_in >= 0.0) || !(r_out > r_in))
          throw ParameterError("Inclusion: annulus requires 0 <= r_in < r_out");
        if (!(std::hypot(cx, cy) + r_out < 1.0))
          throw ParameterError("Inclusion: annulus must lie strictly inside the unit disk");
        break;
      case Shape::Polygon:
        if (vertices.size() < 3) throw ParameterError("Inclusion: polygon needs >= 3 vertices");
        for (const Vec2& v : vertices) {
          if (!(std::hypot(v.x, v.y) < 1.0))
            throw ParameterError("Inclusion: polygon vertices must lie strictly inside the unit disk");
        }
        break;
    }
  }
};

// Piecewise-constant conductivity sigma = 1 + inclusions over background 1.
struct Phantom {
  std::vector<Inclusion> inclusions;

  void validate() const {
    for (const Inclusion& inc : inclusions) inc.validate();
  }

  // Conductivity at a point; later inclusions overwrite earlier ones.
  double sigma_at(double x, double y) const {
    for (auto it = inclusions.rbegin(); it != inclusions.rend(); ++it) {
      if (it->contains(x, y)) return it->value;
    }
    return 1.0;
  }

  // Contrast kappa = sigma - 1.
  double kappa_at(double x, double y) const { return sigma_at(x, y) - 1.0; }

  // Cellwise conductivity by centroid membership.
  Eigen::VectorXd rasterize_sigma(const TriMesh& mesh) const {
    const CellGeometry g = cell_geometry(mesh);
    Eigen::VectorXd s(mesh.num_cells());
    for (int t = 0; t < mesh.num_cells(); ++t) s[t] = sigma_at(g.centroid(t, 0), g.centroid(t, 1));
    return s;
  }

  Eigen::VectorXd rasterize_kappa(const TriMesh& mesh) const {
    return rasterize_sigma(mesh).array() - 1.0;
  }
};

inline Phantom phantom_from_json(const nlohmann::json& doc) {
  Phantom p;
  if (!doc.is_object() || !doc.contains("inclusions") || !doc["inclusions"].is_array())
    throw ParameterError("phantom: expected object with an 'inclusions' array");
  for (const auto& item : doc["inclusions"]) {
    Inclusion inc;
    const std::string shape = item.value("shape", "");
    inc.value = item.value("value", 0.0);
    if (shape == "disk") {
      inc.shape = Inclusion::Shape::Disk;
      const auto c = item.at("center");
      inc.cx = c.at(0).get<double>();
      inc.cy = c.at(1).get<double>();
      inc.radius = item.at("radius").get<double>();
    } else if (shape == "annulus") {
      inc.shape = Inclusion::Shape::Annulus;
      const auto c = item.at("center");
      inc.cx = c.at(0).get<double>();
      inc.cy = c.at(1).get<double>();
      inc.r_in = item.at("r_in").get<double>();
      inc.r_out = item.at("r_out").get<double>();
    } else if (shape == "polygon") {
      inc.shape = Inclusion::Shape::Polygon;
      for (const auto& v : item.at("vertices")) {
        inc.vertices.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
      }
    } else {
      throw ParameterError("phantom: unknown shape '" + shape + "'");
    }
    p.inclusions.push_back(std::move(inc));
  }
  p.validate();
  return p;
}

inline Phantom load_phantom(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("load_phantom: cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError("load_phantom: invalid JSON in " + path + ": " + e.what());
  }
  try {
    return phantom_from_json(doc);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError("load_phantom: bad phantom schema in " + path + ": " + e.what());
  }
}

inline nlohmann::json phantom_to_json(const Phantom& p) {
  nlohmann::json doc;
  doc["inclusions"] = nlohmann::json::array();
  for (const Inclusion& inc : p.inclusions) {
    nlohmann::json item;
    item["value"] = inc.value;
    switch (inc.shape) {
      case Inclusion::Shape::Disk:
        item["shape"] = "disk";
        item["center"] = {inc.cx, inc.cy};
        item["radius"] = inc.radius;
        break;
      case Inclusion::Shape::Annulus:
        item["shape"] = "annulus";
        item["center"] = {inc.cx, inc.cy};
        item["r_in"] = inc.r_in;
        item["r_out"] = inc.r_out;
        break;
      case Inclusion::Shape::Polygon:
        item["shape"] = "polygon";
        item["vertices"] = nlohmann::json::array();
        for (const Vec2& v : inc.vertices) item["vertices"].push_back({v.x, v.y});
        break;
    }
    doc["inclusions"].push_back(std::move(item));
  }
  return doc;
}

inline void save_phantom(const Phantom& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("save_phantom: cannot open " + path);
  out << phantom_to_json(p).dump(2) << "\n";
}

// Benchmark scenes used by the demos and the test suite.
inline Phantom single_disk_phantom(double cx = 0.4, double cy = 0.0, double radius = 0.25,
                                   double value = 2.0) {
  Phantom p;
  Inclusion inc;
  inc.shape = Inclusion::Shape::Disk;
  inc.cx = cx;
  inc.cy = cy;
  inc.radius = radius;
  inc.value = value;
  p.inclusions.push_back(inc);
  p.validate();
  return p;
}

inline Phantom two_disk_phantom() {
  Phantom p;
  for (const double cx : {-0.45, 0.45}) {
    Inclusion inc;
    inc.shape = Inclusion::Shape::Disk;
    inc.cx = cx;
    inc.cy = 0.0;
    inc.radius = 0.2;
    inc.value = 2.0;
    p.inclusions.push_back(inc);
  }
  p.validate();
  return p;
}

}  // namespace eit
