# Tests for heun-connect
