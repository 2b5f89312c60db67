import logging

from django.apps import AppConfig

logger = logging.getLogger(__name__)


class SummationPairsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'summation_pairs'

    def ready(self):
        from summation_pairs.conf import get_config

        # Fail early on a broken override file rather than mid-run
        try:
            config = get_config()
        except Exception as e:
            logger.error(f"Error loading fspair configuration: {str(e)}")
            raise
        logger.debug(f"fspair configuration: {config}")
