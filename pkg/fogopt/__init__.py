from .exceptions import *  # noqa
from .util import *  # noqa
from .model import *  # noqa
from .single import *  # noqa
from .trace import *  # noqa
from .central import *  # noqa
from .transport import *  # noqa
from .dist import *  # noqa
from .scenario import *  # noqa
from .cli import *  # noqa
