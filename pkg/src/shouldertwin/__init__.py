"""Software twin of a haptic shoulder exoskeleton."""
