#include "hcm.h"

int demo(void) {
    double v[4] = {1.0, 0.0, 1.0, 0.0};
    HcmModem *modem = NULL;
    if (hcm_fwht(v, 4) != HCM_STATUS_OK) {
        return 1;
    }
    if (hcm_modem_new(16, 2, true, 0, &modem) != HCM_STATUS_OK) {
        return hcm_last_error() != NULL;
    }
    size_t bits = hcm_modem_bits_per_symbol(modem);
    hcm_modem_free(modem);
    return (int)bits;
}
