#include <math.h>
#include <stdio.h>
#include "sketchlab.h"

#define CHECK(call)                                                           \
  do {                                                                        \
    SlStatus s_ = (call);                                                     \
    if (s_ != SL_STATUS_OK) {                                                 \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, sl_last_error_message()); \
      return 1;                                                               \
    }                                                                         \
  } while (0)

int main(void) {
  double a[40], b[20];
  for (int i = 0; i < 20; i++) {
    a[i] = 1.0;
    a[20 + i] = (double)i;
    b[i] = (double)(i * i % 7);
  }
  SlMatrix *ma = NULL, *mb = NULL, *omega = NULL, *xhat = NULL;
  CHECK(sl_matrix_new(20, 2, a, &ma));
  CHECK(sl_matrix_new(20, 1, b, &mb));
  CHECK(sl_embedding_sample(SL_EMBEDDING_KIND_GAUSSIAN, 20, 8, 0, 1, 0, &omega));
  double eps = -1.0;
  CHECK(sl_sketch_and_solve(ma, mb, omega, &xhat, &eps));
  if (!(eps >= 0.0) || sl_matrix_rows(xhat) != 2) return 2;

  SlBoundQuery q = {SL_FIELD_REAL, 1000, 0, 10, 20, 0, 0, 0};
  double ratio = 0.0;
  CHECK(sl_bound(SL_BOUND_SKETCH_SOLVE_GAUSSIAN, &q, &ratio));
  if (fabs(ratio - 19.0 / 9.0) > 1e-12) return 3;

  SlSplit split;
  CHECK(sl_plan_split(16, 80, 0, &split));
  if (split.k != 53 || split.ell != 27) return 4;

  if (sl_embedding_sample(SL_EMBEDDING_KIND_GAUSSIAN, 5, 9, 0, 1, 0, &omega) != SL_STATUS_INVALID_SPEC) return 5;

  sl_matrix_free(xhat);
  sl_matrix_free(omega);
  sl_matrix_free(mb);
  sl_matrix_free(ma);
  printf("ok %s\n", sl_version());
  return 0;
}
