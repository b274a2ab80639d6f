#include <math.h>
#include <stdio.h>
#include <string.h>

#include "kacstroock.h"

#define CHECK(call)                                                        \
  do {                                                                     \
    KsStatus s_ = (call);                                                  \
    if (s_ != KS_STATUS_OK) {                                              \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, ks_last_error()); \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  KsTriplet *t = NULL;
  CHECK(ks_triplet_from_json("{\"family\": \"poisson\", \"params\": {\"rate\": 1}}", &t));
  double a, b, c;
  CHECK(ks_levy_exponent(t, 1.5707963267948966, &a, &b));
  CHECK(ks_normalization_constant(t, 1.5707963267948966, &c));
  if (fabs(a - 1.0) > 1e-15 || fabs(c - 1.0) > 1e-15) return 2;
  if (ks_normalization_constant(t, 6.283185307179586, &c) != KS_STATUS_DEGENERATE_THETA) return 3;
  if (strstr(ks_last_error(), "degenerate") == NULL) return 4;
  ks_triplet_free(t);

  KsConfig *cfg = NULL;
  CHECK(ks_config_from_preset("poisson-pi-half", &cfg));
  CHECK(ks_config_set_run(cfg, 200, 9));
  KsPaths *paths = NULL;
  CHECK(ks_simulate(cfg, 1, &paths));
  size_t comps, reps, points;
  CHECK(ks_paths_shape(paths, &comps, &reps, &points));
  if (comps != 1 || reps != 200) return 5;
  double re[4096], im[4096];
  if (points > 4096) return 6;
  CHECK(ks_paths_replica(paths, 0, 199, re, im, points));
  if (re[0] != 0.0 || im[0] != 0.0) return 7;
  ks_paths_free(paths);
  ks_config_free(cfg);
  printf("ok %s\n", ks_version());
  return 0;
}
