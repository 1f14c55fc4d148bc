#include "local.h"

static int app_state;

int app_ready(void)
{
    return app_state == STATE_READY;
}
