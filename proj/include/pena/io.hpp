#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "pena/coalescent.hpp"
#include "pena/expo.hpp"
#include "pena/mc.hpp"
#include "pena/pp_core.hpp"
#include "pena/stoch_int.hpp"

namespace pena {

// Shortest round-trip decimal form, '.' decimal point, no locale dependence.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string path_to_csv(const MarkedPointPath& path) {
  std::string out = "time,mark\n";
  for (const MarkEvent& e : path.events)
    out += format_double(e.time) + "," + format_double(e.mark) + "\n";
  return out;
}

inline std::string martingale_to_csv(const MartingalePath& mp) {
  std::string out = "time,dM,M,QV,PQV\n";
  for (std::size_t k = 0; k < mp.times.size(); ++k)
    out += format_double(mp.times[k]) + "," + format_double(mp.dm[k]) + "," +
           format_double(mp.m[k]) + "," + format_double(mp.qv[k]) + "," +
           format_double(mp.pqv[k]) + "\n";
  return out;
}

inline std::string exponent_to_csv(const ExponentPath& ep) {
  std::string out = "time,S,X,ES,U,R\n";
  for (std::size_t k = 0; k < ep.times.size(); ++k)
    out += format_double(ep.times[k]) + "," + format_double(ep.s[k]) + "," +
           format_double(ep.x[k]) + "," + format_double(ep.dd[k]) + "," +
           format_double(ep.u[k]) + "," + format_double(ep.r[k]) + "\n";
  return out;
}

inline std::string coalescent_to_csv(const CoalescentTrajectory& traj,
                                     const MartingalePath& mp) {
  std::string out = "time,N,k,dM,M,QV,PQV\n";
  int n = traj.n0;
  for (std::size_t i = 0; i < traj.events.size(); ++i) {
    n -= traj.events[i].k - 1;
    out += format_double(traj.events[i].time) + "," + std::to_string(n) + "," +
           std::to_string(traj.events[i].k) + "," + format_double(mp.dm[i]) + "," +
           format_double(mp.m[i]) + "," + format_double(mp.qv[i]) + "," +
           format_double(mp.pqv[i]) + "\n";
  }
  return out;
}

inline std::string bound_rows_to_csv(const std::vector<BoundRow>& rows) {
  std::string out = "x,v2,bound_name,value\n";
  for (const BoundRow& r : rows)
    out += format_double(r.x) + "," + format_double(r.v2) + "," + r.name + "," +
           format_double(r.value) + "\n";
  return out;
}

inline std::string bound_table_to_csv(const std::vector<BoundTableRow>& rows) {
  std::string out = "x,v2,pena_poisson,pena_gauss,freedman\n";
  for (const BoundTableRow& r : rows)
    out += format_double(r.x) + "," + format_double(r.v2) + "," +
           format_double(r.pena_poisson) + "," + format_double(r.pena_gauss) + "," +
           format_double(r.freedman) + "\n";
  return out;
}

}  // namespace pena
