#include <math.h>
#include <stdio.h>
#include <string.h>

#include "symbohm.h"

#define CHECK(call)                                                        \
  do {                                                                     \
    SymbohmStatus s_ = (call);                                             \
    if (s_ != SYMBOHM_STATUS_OK) {                                         \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, symbohm_last_error()); \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  SymbohmGrid *grid = NULL;
  SymbohmWavefunction *psi = NULL;
  SymbohmRecord *rec = NULL;
  SymbohmReport *report = NULL;
  double re = 0.0, im = 0.0;

  if (symbohm_grid_new(100, 10.0, 0.0, &grid) != SYMBOHM_STATUS_CONFIG) return 2;
  if (strlen(symbohm_last_error()) == 0) return 3;

  CHECK(symbohm_grid_new(256, 40.0, 0.0, &grid));
  CHECK(symbohm_gaussian_new(grid, 0.0, 1.0, 1.0, 0.0, &psi));
  CHECK(symbohm_amplitude(psi, psi, &re, &im));
  if (fabs(re - 1.0) > 1e-12 || fabs(im) > 1e-12) return 4;

  CHECK(symbohm_evolve(psi, 0.0, 1.0, 0.01, 10, &rec));
  if (symbohm_record_len(rec) != 11) return 5;

  CHECK(symbohm_scenario_run("measurement-limit", NULL, NULL, &report));
  if (symbohm_report_passed(report) != 1) return 6;
  if (strstr(symbohm_report_json(report), "\"measurement-limit\"") == NULL) return 7;

  symbohm_report_free(report);
  symbohm_record_free(rec);
  symbohm_wavefunction_free(psi);
  symbohm_grid_free(grid);
  printf("ok %s\n", symbohm_version());
  return 0;
}
